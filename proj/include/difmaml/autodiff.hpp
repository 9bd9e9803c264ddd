#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "difmaml/errors.hpp"
#include "difmaml/vecmath.hpp"

namespace difmaml::autodiff {

using NodeId = int;

// One batch of task data. For regression tasks inputs/targets hold the (x, y)
// pairs; for the quadratic oracle family inputs hold the noise vectors and
// targets stays empty.
struct DataBatch {
    int count = 0;
    int input_dim = 0;
    int target_dim = 0;
    std::vector<double> inputs;   // count * input_dim, row-major
    std::vector<double> targets;  // count * target_dim, row-major

    std::span<const double> input(int i) const {
        return {inputs.data() + static_cast<std::size_t>(i) * input_dim,
                static_cast<std::size_t>(input_dim)};
    }
    std::span<const double> target(int i) const {
        return {targets.data() + static_cast<std::size_t>(i) * target_dim,
                static_cast<std::size_t>(target_dim)};
    }
};

// Tape of primitive-operation records, topologically ordered by construction.
// Nodes are vector-valued; values live in a flat arena that is reused across
// evaluations. A tape holds exactly one parameter leaf and is replayed without
// any graph rewriting.
//
// Two evaluation modes:
//   forward/backward            -> loss value and gradient
//   forward_dual/backward_dual  -> additionally propagates a directional
//                                  tangent, so the adjoint tangent of the
//                                  leaf is the exact Hessian-vector product.
class Tape {
public:
    NodeId leaf(int size);
    NodeId constant(std::span<const double> data);
    // y = W x + b with W (out_dim x in_dim, row-major) and b stored inside the
    // parameter leaf at the given offsets.
    NodeId affine_params(NodeId x, int w_offset, int b_offset, int out_dim, int in_dim);
    NodeId sub(NodeId a, NodeId b);
    NodeId relu(NodeId x);
    NodeId sum_sq(NodeId x);                              // scalar: sum_i x_i^2
    NodeId quad_form(NodeId d, const SymMatrix& h);       // scalar: 0.5 d'Hd
    NodeId mean_scalars(std::span<const NodeId> terms);   // scalar mean
    NodeId lin_comb(NodeId a, NodeId b, double ca, double cb);  // scalars

    void set_output(NodeId id);
    NodeId output() const { return output_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    // Resets the tape structure but keeps arena capacity.
    void clear();

    void forward(std::span<const double> leaf_values);
    void backward();
    void forward_dual(std::span<const double> leaf_values,
                      std::span<const double> leaf_tangents);
    void backward_dual();

    double output_value() const;
    bool values_finite() const;
    std::span<const double> leaf_adjoint() const;
    std::span<const double> leaf_adjoint_tangent() const;

private:
    enum class Op : std::uint8_t {
        kLeaf,
        kConstant,
        kAffineParams,
        kSub,
        kRelu,
        kSumSq,
        kQuadForm,
        kMeanScalars,
        kLinComb,
    };

    struct Node {
        Op op;
        int size;          // output dimension
        int val;           // offset into the value arenas
        int a = -1;        // first input node
        int b = -1;        // second input node
        int payload = -1;  // offset into payload_ (constants, H matrices)
        int w_offset = 0;  // affine: weight offset in the leaf
        int b_offset = 0;  // affine: bias offset in the leaf
        int in_dim = 0;    // affine: input dimension
        int args_begin = 0;
        int args_count = 0;
        double ca = 0.0;
        double cb = 0.0;
    };

    NodeId push(Node n);
    void run_forward(bool dual);
    void run_backward(bool dual);

    std::vector<Node> nodes_;
    std::vector<int> args_;
    std::vector<double> payload_;
    std::vector<double> val_, tan_, adj_, adj_tan_;
    int total_size_ = 0;
    NodeId leaf_ = -1;
    NodeId output_ = -1;
};

// A differentiable scalar loss: given the parameter leaf and a batch, builds
// the loss node on the tape. Implementations live with the model and task
// modules; the tape stays agnostic of what it differentiates.
class LossFunction {
public:
    virtual ~LossFunction() = default;
    virtual int param_dim() const = 0;
    virtual NodeId build(Tape& tape, NodeId w, const DataBatch& batch) const = 0;
};

struct ValueGrad {
    double value;
    ParamVector grad;
};

// Gradient of the batch-mean loss at w. Throws NonFiniteValue if any
// intermediate is NaN/Inf and DimensionMismatch when the batch disagrees with
// the loss input size.
ParamVector gradient(const LossFunction& f, const ParamVector& w, const DataBatch& batch);

ValueGrad value_and_gradient(const LossFunction& f, const ParamVector& w,
                             const DataBatch& batch);

// Exact Hessian-vector product of the batch-mean loss: returns
// (d^2 loss / dw^2) v without materializing the Hessian.
ParamVector hvp(const LossFunction& f, const ParamVector& w, const ParamVector& v,
                const DataBatch& batch);

}  // namespace difmaml::autodiff
