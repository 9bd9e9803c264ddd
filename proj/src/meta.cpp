#include "difmaml/meta.hpp"

#include <cmath>

#include "difmaml/errors.hpp"

namespace difmaml::meta {

void MetaConfig::validate() const {
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
    if (inner_batch < 1 || outer_batch < 1 || task_batch < 1)
        throw ConfigError("batch sizes must be >= 1");
}

Objective::Objective(model::ModelSpec spec) : spec_(std::move(spec)) {}

int Objective::param_dim(const tasks::Task& task) const {
    if (std::holds_alternative<tasks::SineTask>(task)) {
        if (!spec_) throw UnsupportedFamily("sine tasks need a model spec");
        return spec_->param_count();
    }
    return std::get<tasks::QuadTask>(task).dim();
}

std::unique_ptr<autodiff::LossFunction> Objective::make_loss(const tasks::Task& task) const {
    if (std::holds_alternative<tasks::SineTask>(task)) {
        if (!spec_) throw UnsupportedFamily("sine tasks need a model spec");
        return std::make_unique<model::MlpMseLoss>(*spec_);
    }
    return std::make_unique<tasks::QuadLoss>(std::get<tasks::QuadTask>(task));
}

double Objective::loss_value(const tasks::Task& task, const ParamVector& w,
                             const autodiff::DataBatch& batch) const {
    if (std::holds_alternative<tasks::SineTask>(task)) {
        if (!spec_) throw UnsupportedFamily("sine tasks need a model spec");
        return model::mse_loss(*spec_, w, batch);
    }
    return tasks::quad_batch_loss(std::get<tasks::QuadTask>(task), w, batch);
}

AdaptResult inner_adapt(const Objective& objective, const tasks::Task& task,
                        const ParamVector& w, const MetaConfig& cfg, RngStream& rng) {
    cfg.validate();
    auto loss = objective.make_loss(task);

    AdaptResult result;
    result.w = w;
    result.inner_batches.reserve(static_cast<std::size_t>(cfg.inner_steps));
    for (int s = 0; s < cfg.inner_steps; ++s) {
        autodiff::DataBatch batch = tasks::sample_data(task, cfg.inner_batch, rng);
        ParamVector g = autodiff::gradient(*loss, result.w, batch);
        axpy(-cfg.alpha, g, result.w);
        result.inner_batches.push_back(std::move(batch));
    }
    return result;
}

MetaGradient meta_gradient_with_batches(const autodiff::LossFunction& loss,
                                        const ParamVector& w,
                                        std::span<const autodiff::DataBatch> inner,
                                        const autodiff::DataBatch& outer,
                                        const MetaConfig& cfg) {
    // Inner trajectory with every intermediate point kept: the transposed
    // chain rule applies the (I - a H) factors in reverse step order.
    std::vector<ParamVector> points;
    points.reserve(inner.size() + 1);
    points.push_back(w);
    for (const autodiff::DataBatch& batch : inner) {
        ParamVector g = autodiff::gradient(loss, points.back(), batch);
        ParamVector next = points.back();
        axpy(-cfg.alpha, g, next);
        points.push_back(std::move(next));
    }

    auto vg = autodiff::value_and_gradient(loss, points.back(), outer);
    MetaGradient out;
    out.mean_outer_loss = vg.value;
    out.grad = std::move(vg.grad);
    if (!cfg.first_order && cfg.alpha != 0.0) {
        for (int s = static_cast<int>(inner.size()) - 1; s >= 0; --s) {
            ParamVector hv = autodiff::hvp(loss, points[static_cast<std::size_t>(s)],
                                           out.grad, inner[static_cast<std::size_t>(s)]);
            axpy(-cfg.alpha, hv, out.grad);
        }
    }
    return out;
}

MetaGradient stochastic_meta_gradient(const Objective& objective, const ParamVector& w,
                                      std::span<const tasks::Task> task_batch,
                                      const MetaConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (task_batch.empty()) throw ConfigError("task batch must not be empty");

    MetaGradient out;
    out.grad.assign(w.size(), 0.0);

    std::vector<autodiff::DataBatch> inner(static_cast<std::size_t>(cfg.inner_steps));
    for (const tasks::Task& task : task_batch) {
        auto loss = objective.make_loss(task);
        for (int s = 0; s < cfg.inner_steps; ++s)
            inner[static_cast<std::size_t>(s)] = tasks::sample_data(task, cfg.inner_batch, rng);
        const autodiff::DataBatch outer = tasks::sample_data(task, cfg.outer_batch, rng);

        MetaGradient task_grad = meta_gradient_with_batches(*loss, w, inner, outer, cfg);
        out.mean_outer_loss += task_grad.mean_outer_loss;
        axpy(1.0, task_grad.grad, out.grad);
    }

    const double inv = 1.0 / static_cast<double>(task_batch.size());
    for (double& v : out.grad) v *= inv;
    out.mean_outer_loss *= inv;
    if (!all_finite(out.grad)) throw NonFiniteValue("non-finite meta gradient");
    return out;
}

namespace {

// (I - aH) H (I - aH) d, without forming the matrix product.
ParamVector meta_curvature_apply(const SymMatrix& h, double alpha,
                                 std::span<const double> d) {
    std::vector<double> t1 = h.matvec(d);          // H d
    std::vector<double> t2(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t2[i] = d[i] - alpha * t1[i];  // (I-aH)d
    std::vector<double> t3 = h.matvec(t2);         // H(I-aH)d
    std::vector<double> t4 = h.matvec(t3);         // H^2(I-aH)d
    ParamVector out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = t3[i] - alpha * t4[i];
    return out;
}

void check_support(const tasks::QuadSupport& support, const ParamVector& w) {
    if (support.tasks.empty()) throw ConfigError("empty quad support");
    if (support.tasks.size() != support.probs.size())
        throw ConfigError("support probabilities mismatch");
    for (const auto& t : support.tasks)
        if (t.dim() != static_cast<int>(w.size()))
            throw DimensionMismatch("quad support dimension mismatch");
}

}  // namespace

ParamVector exact_meta_gradient_quad(const ParamVector& w,
                                     const tasks::QuadSupport& support, double alpha) {
    check_support(support, w);
    ParamVector out(w.size(), 0.0);
    std::vector<double> d(w.size());
    for (std::size_t t = 0; t < support.tasks.size(); ++t) {
        const tasks::QuadTask& task = support.tasks[t];
        for (std::size_t i = 0; i < w.size(); ++i) d[i] = w[i] - task.theta[i];
        ParamVector g = meta_curvature_apply(task.h, alpha, d);
        axpy(support.probs[t], g, out);
    }
    return out;
}

double maml_objective_quad(const ParamVector& w, const tasks::QuadSupport& support,
                           double alpha) {
    check_support(support, w);
    double value = 0.0;
    std::vector<double> d(w.size()), u(w.size());
    for (std::size_t t = 0; t < support.tasks.size(); ++t) {
        const tasks::QuadTask& task = support.tasks[t];
        for (std::size_t i = 0; i < w.size(); ++i) d[i] = w[i] - task.theta[i];
        std::vector<double> hd = task.h.matvec(d);
        for (std::size_t i = 0; i < w.size(); ++i) u[i] = d[i] - alpha * hd[i];
        value += support.probs[t] * 0.5 * task.h.quad_form(u);
    }
    return value;
}

double adjusted_objective_quad(const ParamVector& w, const tasks::QuadSupport& support,
                               double alpha, int inner_batch) {
    if (inner_batch < 1) throw ConfigError("inner batch must be >= 1");
    check_support(support, w);
    double gap = 0.0;
    for (std::size_t t = 0; t < support.tasks.size(); ++t) {
        const tasks::QuadTask& task = support.tasks[t];
        gap += support.probs[t] * task.sigma * task.sigma * task.h.trace_cube();
    }
    gap *= alpha * alpha / (2.0 * inner_batch);
    return maml_objective_quad(w, support, alpha) + gap;
}

ParamVector adjusted_gradient_quad(const ParamVector& w,
                                   const tasks::QuadSupport& support, double alpha) {
    return exact_meta_gradient_quad(w, support, alpha);
}

}  // namespace difmaml::meta
