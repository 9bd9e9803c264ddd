#pragma once

#include <cstdint>
#include <vector>

#include "difmaml/autodiff.hpp"
#include "difmaml/vecmath.hpp"

namespace difmaml::model {

enum class Activation { relu, identity };

// Fully-connected network shape. Parameters are flattened layer by layer,
// each layer as W (out x in, row-major) followed by b.
struct ModelSpec {
    std::vector<int> layer_sizes;  // at least input and output
    Activation activation = Activation::relu;

    int param_count() const;
    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
    // Offset of layer l's weight block; biases follow the weights.
    int weight_offset(int l) const;
    int bias_offset(int l) const;
};

// Glorot-uniform weights, zero biases; deterministic in the seed.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Plain (tape-free) forward pass; the final layer has no activation.
std::vector<double> forward(const ModelSpec& spec, const ParamVector& w,
                            std::span<const double> x);

// Mean over the batch of squared error ||pred - y||^2 (no 1/2 factor).
double mse_loss(const ModelSpec& spec, const ParamVector& w,
                const autodiff::DataBatch& batch);

// Taped MSE loss for gradient / Hessian-vector products.
class MlpMseLoss final : public autodiff::LossFunction {
public:
    explicit MlpMseLoss(ModelSpec spec) : spec_(std::move(spec)) {}

    int param_dim() const override { return spec_.param_count(); }
    autodiff::NodeId build(autodiff::Tape& tape, autodiff::NodeId w,
                           const autodiff::DataBatch& batch) const override;

    const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
};

}  // namespace difmaml::model
