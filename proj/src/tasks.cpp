#include "difmaml/tasks.hpp"

#include <cmath>

#include "difmaml/errors.hpp"

namespace difmaml::tasks {

std::pair<double, double> TaskDistribution::amplitude_interval(int agent) const {
    const double width = (amp_hi - amp_lo) / agent_count;
    return {amp_lo + agent * width, amp_lo + (agent + 1) * width};
}

TaskDistribution TaskDistribution::union_of() const {
    TaskDistribution u = *this;
    u.agent_count = 1;
    if (family == Family::quad) {
        QuadSupport merged;
        const double scale = 1.0 / agent_count;
        for (const QuadSupport& s : quad_supports) {
            for (std::size_t i = 0; i < s.tasks.size(); ++i) {
                merged.tasks.push_back(s.tasks[i]);
                merged.probs.push_back(s.probs[i] * scale);
            }
        }
        u.quad_supports = {std::move(merged)};
    }
    return u;
}

std::vector<Task> sample_tasks(const TaskDistribution& dist, int agent, int n,
                               RngStream& rng) {
    if (agent < 0 || agent >= dist.agent_count)
        throw BadAgentIndex("agent index out of range");

    std::vector<Task> out;
    out.reserve(static_cast<std::size_t>(n));
    if (dist.family == Family::sine) {
        auto [lo, hi] = dist.amplitude_interval(agent);
        for (int i = 0; i < n; ++i) {
            SineTask t{};
            t.amplitude = rng.uniform(lo, hi);
            t.phase = rng.uniform(dist.phase_lo, dist.phase_hi);
            out.emplace_back(t);
        }
    } else {
        const QuadSupport& support = dist.quad_supports.at(static_cast<std::size_t>(agent));
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t pick = support.tasks.size() - 1;
            for (std::size_t j = 0; j < support.probs.size(); ++j) {
                acc += support.probs[j];
                if (u < acc) {
                    pick = j;
                    break;
                }
            }
            out.emplace_back(support.tasks[pick]);
        }
    }
    return out;
}

autodiff::DataBatch sample_data(const Task& task, int n, RngStream& rng) {
    autodiff::DataBatch batch;
    batch.count = n;
    if (const auto* sine = std::get_if<SineTask>(&task)) {
        batch.input_dim = 1;
        batch.target_dim = 1;
        batch.inputs.resize(static_cast<std::size_t>(n));
        batch.targets.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform(-5.0, 5.0);
            batch.inputs[static_cast<std::size_t>(i)] = x;
            batch.targets[static_cast<std::size_t>(i)] =
                sine->amplitude * std::sin(x + sine->phase);
        }
    } else {
        const auto& quad = std::get<QuadTask>(task);
        const int m = quad.dim();
        batch.input_dim = m;
        batch.target_dim = 0;
        batch.inputs.resize(static_cast<std::size_t>(n) * m);
        for (int i = 0; i < n * m; ++i)
            batch.inputs[static_cast<std::size_t>(i)] =
                quad.sigma == 0.0 ? 0.0 : quad.sigma * rng.normal();
    }
    return batch;
}

double quad_exact_risk(const QuadTask& task, const ParamVector& w) {
    if (static_cast<int>(w.size()) != task.dim())
        throw DimensionMismatch("quad task dimension mismatch");
    std::vector<double> d(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) d[i] = w[i] - task.theta[i];
    return 0.5 * task.h.quad_form(d) + 0.5 * task.sigma * task.sigma * task.h.trace();
}

double quad_batch_loss(const QuadTask& task, const ParamVector& w,
                       const autodiff::DataBatch& batch) {
    const int m = task.dim();
    std::vector<double> d(static_cast<std::size_t>(m));
    double total = 0.0;
    for (int s = 0; s < batch.count; ++s) {
        auto x = batch.input(s);
        for (int i = 0; i < m; ++i) d[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - task.theta[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
        total += 0.5 * task.h.quad_form(d);
    }
    return total / batch.count;
}

autodiff::NodeId QuadLoss::build(autodiff::Tape& tape, autodiff::NodeId w,
                                 const autodiff::DataBatch& batch) const {
    if (batch.input_dim != task_->dim())
        throw DimensionMismatch("batch dimension does not match quad task");

    const int m = task_->dim();
    std::vector<double> shifted(static_cast<std::size_t>(m));
    std::vector<autodiff::NodeId> per_sample;
    per_sample.reserve(static_cast<std::size_t>(batch.count));
    for (int s = 0; s < batch.count; ++s) {
        auto x = batch.input(s);
        for (int i = 0; i < m; ++i)
            shifted[static_cast<std::size_t>(i)] =
                task_->theta[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(i)];
        autodiff::NodeId d = tape.sub(w, tape.constant(shifted));
        per_sample.push_back(tape.quad_form(d, task_->h));
    }
    return tape.mean_scalars(per_sample);
}

}  // namespace difmaml::tasks
