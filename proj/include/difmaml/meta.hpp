#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "difmaml/autodiff.hpp"
#include "difmaml/model.hpp"
#include "difmaml/tasks.hpp"

namespace difmaml::meta {

// Inner-loop configuration. alpha is the task-adaptation step size; the
// single-step case is the form the theory analyzes, multi-step differentiates
// through every step via nested Hessian-vector products. first_order drops
// the curvature terms entirely (experiment parity mode).
struct MetaConfig {
    double alpha = 0.01;
    int inner_steps = 1;
    int inner_batch = 10;   // |D_in|
    int outer_batch = 10;   // |D_o|
    int task_batch = 1;     // |S_k|
    bool first_order = false;

    void validate() const;
};

// Bridges tasks to differentiable losses: sine tasks train the shared MLP,
// quadratic tasks carry their own closed-form loss.
class Objective {
public:
    Objective() = default;  // quad-only mode
    explicit Objective(model::ModelSpec spec);

    int param_dim(const tasks::Task& task) const;
    std::unique_ptr<autodiff::LossFunction> make_loss(const tasks::Task& task) const;

    // Tape-free loss value (used by evaluation).
    double loss_value(const tasks::Task& task, const ParamVector& w,
                      const autodiff::DataBatch& batch) const;

    const std::optional<model::ModelSpec>& model_spec() const { return spec_; }

private:
    std::optional<model::ModelSpec> spec_;
};

struct AdaptResult {
    ParamVector w;
    std::vector<autodiff::DataBatch> inner_batches;  // one per inner step
};

// Task-specific adaptation: inner_steps stochastic gradient steps of size
// alpha, each on a freshly sampled inner batch. The batches are returned for
// the outer-loop curvature correction.
AdaptResult inner_adapt(const Objective& objective, const tasks::Task& task,
                        const ParamVector& w, const MetaConfig& cfg, RngStream& rng);

struct MetaGradient {
    ParamVector grad;
    double mean_outer_loss = 0.0;  // batch loss at the adapted parameters
};

// Task meta-gradient for fixed batches: the exact derivative of
// Q(adapt(w); D_o) in w, where adapt runs one inner step per batch in
// `inner`. The transposed chain rule applies the (I - a H) factors through
// one Hessian-vector product per step; first_order drops them.
MetaGradient meta_gradient_with_batches(const autodiff::LossFunction& loss,
                                        const ParamVector& w,
                                        std::span<const autodiff::DataBatch> inner,
                                        const autodiff::DataBatch& outer,
                                        const MetaConfig& cfg);

// Stochastic meta-gradient over a batch of tasks:
//   (1/|S|) sum_t (I - a H_in(t)) grad Q(w - a grad Q(w; D_in); D_o)
// with freshly sampled inner/outer batches per task. Tasks are accumulated
// in batch order so results do not depend on scheduling.
MetaGradient stochastic_meta_gradient(const Objective& objective, const ParamVector& w,
                                      std::span<const tasks::Task> task_batch,
                                      const MetaConfig& cfg, RngStream& rng);

// ---- Exact oracles on the quadratic family (single inner step) ----
//
// For Q(w; x) = 0.5 (w - theta - x)' H (w - theta - x) with x ~ N(0, s^2 I):
//   meta gradient      E_t (I - aH) H (I - aH) (w - theta_t)
//   meta objective     E_t 0.5 (w - theta_t)' (I - aH) H (I - aH) (w - theta_t)
//   adjusted objective adds the constant a^2 s^2 tr(H^3) / (2 |D_in|).
// The constant stochastic-risk floor 0.5 s^2 tr(H) common to both objectives
// is omitted; it carries no dependence on w, alpha, or |D_in|.

ParamVector exact_meta_gradient_quad(const ParamVector& w,
                                     const tasks::QuadSupport& support, double alpha);

double maml_objective_quad(const ParamVector& w, const tasks::QuadSupport& support,
                           double alpha);

double adjusted_objective_quad(const ParamVector& w, const tasks::QuadSupport& support,
                               double alpha, int inner_batch);

// Gradient of the adjusted objective; on this family it coincides with the
// exact meta gradient because the adjustment gap is constant in w.
ParamVector adjusted_gradient_quad(const ParamVector& w,
                                   const tasks::QuadSupport& support, double alpha);

}  // namespace difmaml::meta
