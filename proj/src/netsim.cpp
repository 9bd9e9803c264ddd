#include "difmaml/netsim.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "difmaml/errors.hpp"
#include "difmaml/parallel.hpp"

namespace difmaml::netsim {

namespace {

// Stream derivation keys. Each purpose owns a branch of the seed tree so the
// draw count of one consumer can never shift another.
constexpr std::uint64_t kAgentBranch = 1;
constexpr std::uint64_t kInitBranch = 2;
constexpr std::uint64_t kEvalTasksBranch = 3;
constexpr std::uint64_t kEvalDataBranch = 4;
constexpr std::uint64_t kEvalGradBranch = 5;

// Topologies are pinned by (kind, K, p) alone, independent of the run seed,
// so seed sweeps run on one fixed graph.
constexpr std::uint64_t kTopologySeed = 0xD1F;

graph::Topology build_run_topology(const RunConfig& cfg) {
    const int k = cfg.tasks.agent_count;
    RngStream rng(SeedKey{kTopologySeed}.child(static_cast<std::uint64_t>(k)));
    return graph::build_topology(cfg.topology.kind, k, cfg.topology.p,
                                 cfg.topology.edges, &rng);
}

void apply_optimizer(const OptimizerConfig& opt, AgentState& state,
                     const ParamVector& grad, ParamVector& out) {
    out = state.w;
    if (opt.kind == OptKind::sgd) {
        axpy(-opt.mu, grad, out);
        return;
    }
    AdamState& a = state.opt;
    if (a.m.empty()) {
        a.m.assign(state.w.size(), 0.0);
        a.v.assign(state.w.size(), 0.0);
    }
    a.step += 1;
    const double b1t = 1.0 - std::pow(opt.beta1, static_cast<double>(a.step));
    const double b2t = 1.0 - std::pow(opt.beta2, static_cast<double>(a.step));
    for (std::size_t i = 0; i < out.size(); ++i) {
        a.m[i] = opt.beta1 * a.m[i] + (1.0 - opt.beta1) * grad[i];
        a.v[i] = opt.beta2 * a.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double m_hat = a.m[i] / b1t;
        const double v_hat = a.v[i] / b2t;
        out[i] -= opt.mu * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
}

meta::Objective make_objective(const RunConfig& cfg) {
    if (cfg.tasks.family == tasks::Family::sine) {
        if (!cfg.model) throw ConfigError("sine family requires a model spec");
        return meta::Objective(*cfg.model);
    }
    return meta::Objective();
}

int param_dim(const RunConfig& cfg) {
    if (cfg.tasks.family == tasks::Family::sine) return cfg.model->param_count();
    return cfg.tasks.quad_supports.at(0).tasks.at(0).dim();
}

ParamVector initial_w(const RunConfig& cfg, int agent) {
    SeedKey init = SeedKey{cfg.seed}.child(kInitBranch);
    if (cfg.per_agent_init) init = init.child(static_cast<std::uint64_t>(agent));
    if (cfg.tasks.family == tasks::Family::sine)
        return model::init_params(*cfg.model, init.v);
    RngStream rng(init);
    ParamVector w(static_cast<std::size_t>(param_dim(cfg)));
    for (double& v : w) v = rng.normal();
    return w;
}

}  // namespace

RngStream agent_stream(std::uint64_t seed, int agent) {
    return RngStream(SeedKey{seed}.child(kAgentBranch).child(static_cast<std::uint64_t>(agent)));
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::diffusion: return "diffusion";
        case Strategy::centralized: return "centralized";
        case Strategy::non_cooperative: return "non_cooperative";
    }
    return "?";
}

graph::CombinationMatrix strategy_matrix(const RunConfig& cfg) {
    const int k = cfg.tasks.agent_count;
    switch (cfg.strategy) {
        case Strategy::non_cooperative:
            return graph::CombinationMatrix::identity(k);
        case Strategy::centralized:
            return graph::metropolis_weights(
                graph::build_topology(graph::TopologyKind::complete, k));
        case Strategy::diffusion:
            return graph::metropolis_weights(build_run_topology(cfg));
    }
    throw ConfigError("unknown strategy");
}

ParamVector adapt_step(AgentState& state, const meta::Objective& objective,
                       const tasks::TaskDistribution& dist, int agent,
                       const meta::MetaConfig& meta_cfg, const OptimizerConfig& opt) {
    auto batch = tasks::sample_tasks(dist, agent, meta_cfg.task_batch, state.rng);
    auto mg = meta::stochastic_meta_gradient(objective, state.w, batch, meta_cfg, state.rng);
    state.last_train_loss = mg.mean_outer_loss;
    ParamVector phi;
    apply_optimizer(opt, state, mg.grad, phi);
    if (!all_finite(phi)) throw NonFiniteValue("non-finite intermediate state");
    return phi;
}

std::vector<ParamVector> combine_step(const std::vector<ParamVector>& intermediates,
                                      const graph::CombinationMatrix& a) {
    const int k = static_cast<int>(intermediates.size());
    if (a.agent_count != k) throw DimensionMismatch("combination matrix size mismatch");
    const std::size_t dim = intermediates.at(0).size();
    for (const auto& phi : intermediates)
        if (phi.size() != dim) throw DimensionMismatch("agent dimension mismatch");

    std::vector<ParamVector> out(static_cast<std::size_t>(k),
                                 ParamVector(dim, 0.0));
    for (int dst = 0; dst < k; ++dst) {
        ParamVector& w = out[static_cast<std::size_t>(dst)];
        for (int src = 0; src < k; ++src) {
            const double weight = a.at(src, dst);
            if (weight == 0.0) continue;
            axpy(weight, intermediates[static_cast<std::size_t>(src)], w);
        }
    }
    return out;
}

RunResult run(const RunConfig& cfg, const RowSink& sink) {
    cfg.meta.validate();
    const int k = cfg.tasks.agent_count;
    if (k < 1) throw ConfigError("agent count must be >= 1");
    if (cfg.tasks.family == tasks::Family::quad &&
        static_cast<int>(cfg.tasks.quad_supports.size()) != k)
        throw ConfigError("quad supports must match agent count");

    const meta::Objective objective = make_objective(cfg);
    const graph::CombinationMatrix a = strategy_matrix(cfg);
    const SeedKey root{cfg.seed};
    const tasks::TaskDistribution eval_dist = cfg.tasks.union_of();

    RunResult result;
    result.lambda2 = graph::mixing_rate(a);

    std::vector<AgentState> agents(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        AgentState& s = agents[static_cast<std::size_t>(i)];
        if (cfg.initial_states) {
            s.w = cfg.initial_states->at(static_cast<std::size_t>(i));
        } else {
            s.w = initial_w(cfg, i);
        }
        s.rng = agent_stream(cfg.seed, i);
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto emit = [&](metrics::MetricsRow row) {
        if (sink) sink(row);
        result.rows.push_back(std::move(row));
    };

    auto evaluate = [&](long iteration) {
        RngStream task_rng(root.child(kEvalTasksBranch).child(static_cast<std::uint64_t>(iteration)));
        const auto test_tasks =
            tasks::sample_tasks(eval_dist, 0, cfg.eval_tasks, task_rng);
        const SeedKey data_seed =
            root.child(kEvalDataBranch).child(static_cast<std::uint64_t>(iteration));

        std::vector<ParamVector> states;
        states.reserve(static_cast<std::size_t>(k));
        for (const auto& s : agents) states.push_back(s.w);

        const double disagreement = metrics::network_disagreement(states);
        const ParamVector w_c = metrics::centroid(states);
        const auto grad_est = metrics::centroid_grad_norm_sq(
            objective, cfg.tasks, w_c, cfg.meta, cfg.eval_tasks,
            root.child(kEvalGradBranch).child(static_cast<std::uint64_t>(iteration)));
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

        double train_sum = 0.0, test_sum = 0.0;
        for (int i = 0; i < k; ++i) {
            const auto curve = metrics::meta_test(objective, agents[static_cast<std::size_t>(i)].w,
                                                  test_tasks, cfg.meta,
                                                  cfg.eval_grad_steps, data_seed);
            metrics::MetricsRow row;
            row.iteration = iteration;
            row.strategy = strategy_name(cfg.strategy);
            row.agent_id = i;
            row.train_loss = agents[static_cast<std::size_t>(i)].last_train_loss;
            row.test_loss = curve.back();
            row.disagreement = disagreement;
            row.centroid_grad_norm_sq = grad_est.value;
            row.lambda2 = result.lambda2;
            row.wall_ms = wall_ms;
            train_sum += row.train_loss;
            test_sum += row.test_loss;
            emit(std::move(row));
        }
        metrics::MetricsRow agg;
        agg.iteration = iteration;
        agg.strategy = strategy_name(cfg.strategy);
        agg.agent_id = -1;
        agg.train_loss = train_sum / k;
        agg.test_loss = test_sum / k;
        agg.disagreement = disagreement;
        agg.centroid_grad_norm_sq = grad_est.value;
        agg.lambda2 = result.lambda2;
        agg.wall_ms = wall_ms;
        emit(std::move(agg));
    };

    std::vector<ParamVector> phis(static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    for (long iteration = 1; iteration <= cfg.iterations; ++iteration) {
        parallel_for(k, [&](int i) {
            try {
                phis[static_cast<std::size_t>(i)] =
                    adapt_step(agents[static_cast<std::size_t>(i)], objective, cfg.tasks, i,
                               cfg.meta, cfg.opt);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        });
        for (int i = 0; i < k; ++i) {
            if (errors[static_cast<std::size_t>(i)]) {
                result.aborted = true;
                try {
                    std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
                } catch (const std::exception& e) {
                    result.abort_reason = "iteration " + std::to_string(iteration) +
                                          " agent " + std::to_string(i) + ": " + e.what();
                }
                for (const auto& s : agents) result.final_states.push_back(s.w);
                return result;
            }
        }

        auto combined = combine_step(phis, a);
        for (int i = 0; i < k; ++i) agents[static_cast<std::size_t>(i)].w = std::move(combined[static_cast<std::size_t>(i)]);

        if (cfg.eval_every > 0 && iteration % cfg.eval_every == 0) evaluate(iteration);
    }

    for (const auto& s : agents) result.final_states.push_back(s.w);
    return result;
}

RunResult centralized_reference(const RunConfig& cfg, const RowSink& sink) {
    RunConfig single = cfg;
    single.strategy = Strategy::diffusion;
    single.topology.kind = graph::TopologyKind::complete;
    single.meta.task_batch = cfg.meta.task_batch * cfg.tasks.agent_count;
    single.tasks = cfg.tasks.union_of();
    single.initial_states.reset();
    if (cfg.initial_states)
        single.initial_states = std::vector<ParamVector>{cfg.initial_states->at(0)};
    return run(single, sink);
}

}  // namespace difmaml::netsim
