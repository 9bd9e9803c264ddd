#include "difmaml/metrics.hpp"

#include <cmath>

#include "difmaml/errors.hpp"
#include "difmaml/parallel.hpp"

namespace difmaml::metrics {

ParamVector centroid(std::span<const ParamVector> states) {
    if (states.empty()) throw DimensionMismatch("centroid of zero agents");
    ParamVector c(states[0].size(), 0.0);
    for (const ParamVector& w : states) {
        if (w.size() != c.size()) throw DimensionMismatch("agent dimension mismatch");
        axpy(1.0, w, c);
    }
    const double inv = 1.0 / static_cast<double>(states.size());
    for (double& v : c) v *= inv;
    return c;
}

double network_disagreement(std::span<const ParamVector> states) {
    const ParamVector c = centroid(states);
    double s = 0.0;
    std::vector<double> d(c.size());
    for (const ParamVector& w : states) {
        for (std::size_t i = 0; i < c.size(); ++i) d[i] = w[i] - c[i];
        s += norm_sq(d);
    }
    return s / static_cast<double>(states.size());
}

TheoryConstants theory_constants(const TheoryInputs& in) {
    TheoryConstants c;
    c.in = in;
    const double a = in.alpha;
    const double L = in.L;
    const double d_in = static_cast<double>(in.inner_batch);
    const double d_o = static_cast<double>(in.outer_batch);
    const double one_aL = 1.0 + a * L;
    const double sg2 = in.sigma_G * in.sigma_G;
    const double sh2 = in.sigma_H * in.sigma_H;
    const double gg2 = in.gamma_G * in.gamma_G;
    const double gh2 = in.gamma_H * in.gamma_H;

    c.B_hat = one_aL * in.B;
    c.L_hat = L * one_aL * one_aL + a * in.rho * in.B;

    c.C1_sq = 6.0 * one_aL * one_aL * sg2 * (1.0 / d_o + L * L * a * a / d_in) +
              (6.0 * a * a * sh2 / d_in) * (in.B * in.B + sg2 / d_o) +
              (9.0 * a * a * a * a / (d_in * d_in)) * (sh2 * sh2 + L * L * L * L * sg2 * sg2);

    c.C2_sq = 8.0 * one_aL * one_aL * (1.0 + a * a * L * L) * gg2 +
              4.0 * in.B * in.B * a * a * gh2 + 2.0 * a * a * a * a * gh2 * gh2 +
              16.0 * (1.0 + a * a * a * a * L * L * L * L) * gg2 * gg2;

    c.C3 = one_aL * a * L * in.sigma_G / std::sqrt(d_in) + one_aL * one_aL * in.gamma_G +
           in.B * a * in.sigma_H / std::sqrt(d_in) + in.B * a * in.gamma_H +
           a * a * sh2 / d_in + a * a * gh2 + a * a * L * L * sg2 / d_in +
           2.0 * (1.0 + a * a * L * L) * gg2;

    c.C_sq = (3.0 / in.task_batch) * (c.C1_sq + c.C2_sq + c.C3 * c.C3);
    return c;
}

TheoryInputs quad_theory_inputs(const tasks::TaskDistribution& dist,
                                const meta::MetaConfig& cfg, double radius) {
    if (dist.family != tasks::Family::quad)
        throw UnsupportedFamily("theory inputs are measured on the quad family");

    TheoryInputs in;
    in.alpha = cfg.alpha;
    in.inner_batch = cfg.inner_batch;
    in.outer_batch = cfg.outer_batch;
    in.task_batch = cfg.task_batch;
    in.rho = 0.0;     // quadratic Hessians are constant
    in.sigma_H = 0.0; // deterministic task Hessians

    double theta_max = 0.0;
    for (const auto& support : dist.quad_supports) {
        for (const auto& t : support.tasks) {
            const double lmax = lambda_max(t.h);
            const double noise = t.sigma * std::sqrt(t.h.trace_sq());
            in.L = std::max(in.L, lmax);
            in.B = std::max(in.B, lmax * radius + noise);
            in.sigma_G = std::max(in.sigma_G, noise);
            theta_max = std::max(theta_max, norm(t.theta));
        }
    }

    // Task variability within each agent, measured over ||w|| <= radius + max
    // ||theta_t||. Single-task supports give exactly zero.
    const double w_max = radius + theta_max;
    for (const auto& support : dist.quad_supports) {
        if (support.tasks.size() < 2) continue;
        const int m = support.tasks.front().dim();
        SymMatrix h_bar(m);
        std::vector<double> drift(static_cast<std::size_t>(m), 0.0);
        for (std::size_t t = 0; t < support.tasks.size(); ++t) {
            const auto& task = support.tasks[t];
            const double p = support.probs[t];
            for (std::size_t i = 0; i < h_bar.a.size(); ++i) h_bar.a[i] += p * task.h.a[i];
            auto ht = task.h.matvec(task.theta);
            axpy(p, ht, drift);
        }
        for (std::size_t t = 0; t < support.tasks.size(); ++t) {
            const auto& task = support.tasks[t];
            SymMatrix diff(m);
            for (std::size_t i = 0; i < diff.a.size(); ++i)
                diff.a[i] = task.h.a[i] - h_bar.a[i];
            auto ev = symmetric_eigenvalues(diff);
            const double spec_norm = std::max(std::abs(ev.front()), std::abs(ev.back()));
            auto ht = task.h.matvec(task.theta);
            std::vector<double> dd(ht.size());
            for (std::size_t i = 0; i < ht.size(); ++i) dd[i] = ht[i] - drift[i];
            in.gamma_H = std::max(in.gamma_H, spec_norm);
            in.gamma_G = std::max(in.gamma_G, spec_norm * w_max + norm(dd));
        }
    }
    return in;
}

double disagreement_bound(double mu, double lambda2, double b_hat, double c_sq) {
    if (lambda2 < 0.0 || lambda2 >= 1.0)
        throw LambdaOutOfRange("disagreement bound needs 0 <= lambda2 < 1");
    const double r = lambda2 / (1.0 - lambda2);
    return mu * mu * r * r * (b_hat * b_hat + c_sq);
}

GradNormEstimate centroid_grad_norm_sq_mc(const meta::Objective& objective,
                                          const tasks::TaskDistribution& dist,
                                          const ParamVector& w_c,
                                          const meta::MetaConfig& cfg, int n_mc,
                                          SeedKey seed) {
    if (n_mc < 1) throw ConfigError("n_mc must be >= 1");
    const tasks::TaskDistribution uni = dist.union_of();

    std::vector<ParamVector> draws(static_cast<std::size_t>(n_mc));
    parallel_for(n_mc, [&](int i) {
        RngStream rng(seed.child(static_cast<std::uint64_t>(i)));
        auto batch = tasks::sample_tasks(uni, 0, 1, rng);
        draws[static_cast<std::size_t>(i)] =
            meta::stochastic_meta_gradient(objective, w_c, batch, cfg, rng).grad;
    });

    ParamVector mean(w_c.size(), 0.0);
    for (const auto& g : draws) axpy(1.0, g, mean);
    for (double& v : mean) v /= n_mc;

    GradNormEstimate est;
    est.exact = false;
    est.value = norm_sq(mean);
    if (n_mc >= 2) {
        double var = 0.0;
        std::vector<double> d(w_c.size());
        for (const auto& g : draws) {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] - mean[i];
            var += norm_sq(d);
        }
        est.correction = var / (static_cast<double>(n_mc) * (n_mc - 1.0));
        est.value -= est.correction;
    }
    return est;
}

GradNormEstimate centroid_grad_norm_sq(const meta::Objective& objective,
                                       const tasks::TaskDistribution& dist,
                                       const ParamVector& w_c,
                                       const meta::MetaConfig& cfg, int n_mc,
                                       SeedKey seed) {
    if (dist.family == tasks::Family::quad) {
        ParamVector g(w_c.size(), 0.0);
        for (const auto& support : dist.quad_supports)
            axpy(1.0 / dist.agent_count,
                 meta::adjusted_gradient_quad(w_c, support, cfg.alpha), g);
        return {norm_sq(g), 0.0, true};
    }
    return centroid_grad_norm_sq_mc(objective, dist, w_c, cfg, n_mc, seed);
}

double aggregate_adjusted_objective_quad(const tasks::TaskDistribution& dist,
                                         const ParamVector& w, double alpha,
                                         int inner_batch) {
    if (dist.family != tasks::Family::quad)
        throw UnsupportedFamily("aggregate adjusted objective is quad-only");
    double v = 0.0;
    for (const auto& support : dist.quad_supports)
        v += meta::adjusted_objective_quad(w, support, alpha, inner_batch) /
             dist.agent_count;
    return v;
}

std::vector<double> meta_test(const meta::Objective& objective, const ParamVector& launch,
                              std::span<const tasks::Task> test_tasks,
                              const meta::MetaConfig& cfg, int grad_steps, SeedKey seed) {
    if (grad_steps < 0) throw ConfigError("grad_steps must be >= 0");
    constexpr int kQueryPoints = 100;
    const int n = static_cast<int>(test_tasks.size());

    std::vector<std::vector<double>> per_task(static_cast<std::size_t>(n));
    parallel_for(n, [&](int i) {
        RngStream rng(seed.child(static_cast<std::uint64_t>(i)));
        const tasks::Task& task = test_tasks[static_cast<std::size_t>(i)];
        auto support = tasks::sample_data(task, cfg.inner_batch, rng);
        auto query = tasks::sample_data(task, kQueryPoints, rng);
        auto loss = objective.make_loss(task);

        std::vector<double> losses(static_cast<std::size_t>(grad_steps) + 1);
        ParamVector w = launch;
        losses[0] = objective.loss_value(task, w, query);
        for (int s = 1; s <= grad_steps; ++s) {
            ParamVector g = autodiff::gradient(*loss, w, support);
            axpy(-cfg.alpha, g, w);
            losses[static_cast<std::size_t>(s)] = objective.loss_value(task, w, query);
        }
        per_task[static_cast<std::size_t>(i)] = std::move(losses);
    });

    std::vector<double> mean(static_cast<std::size_t>(grad_steps) + 1, 0.0);
    for (const auto& losses : per_task)
        for (std::size_t s = 0; s < mean.size(); ++s) mean[s] += losses[s];
    for (double& v : mean) v /= n;
    return mean;
}

std::vector<PerturbationRow> perturbation_probe(const tasks::TaskDistribution& dist,
                                                const meta::MetaConfig& cfg,
                                                std::span<const double> alphas,
                                                std::span<const int> inner_batches,
                                                const ParamVector& w_probe, double radius) {
    if (dist.family != tasks::Family::quad)
        throw UnsupportedFamily("perturbation probe is quad-only");
    const tasks::TaskDistribution merged = dist.union_of();
    const tasks::QuadSupport& support = merged.quad_supports.at(0);

    std::vector<PerturbationRow> rows;
    for (double alpha : alphas) {
        for (int d_in : inner_batches) {
            meta::MetaConfig probe_cfg = cfg;
            probe_cfg.alpha = alpha;
            probe_cfg.inner_batch = d_in;
            TheoryInputs in = quad_theory_inputs(dist, probe_cfg, radius);

            PerturbationRow row;
            row.alpha = alpha;
            row.inner_batch = d_in;
            row.obj_gap = meta::adjusted_objective_quad(w_probe, support, alpha, d_in) -
                          meta::maml_objective_quad(w_probe, support, alpha);
            row.obj_bound = alpha * alpha * in.L * in.sigma_G * in.sigma_G / (2.0 * d_in) +
                            in.B * alpha * in.sigma_G / std::sqrt(static_cast<double>(d_in));
            // grad J_bar == grad J_hat on this family; the gap is identically 0.
            row.grad_gap = 0.0;
            row.grad_bound = (1.0 + alpha * in.L) * alpha * in.L * in.sigma_G /
                                 std::sqrt(static_cast<double>(d_in)) +
                             in.B * alpha * in.sigma_H / std::sqrt(static_cast<double>(d_in));
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace difmaml::metrics
