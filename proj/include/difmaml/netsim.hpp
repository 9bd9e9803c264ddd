#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "difmaml/graph.hpp"
#include "difmaml/meta.hpp"
#include "difmaml/metrics.hpp"
#include "difmaml/rng.hpp"
#include "difmaml/tasks.hpp"

namespace difmaml::netsim {

enum class Strategy { diffusion, centralized, non_cooperative };

enum class OptKind { sgd, adam };

struct OptimizerConfig {
    OptKind kind = OptKind::sgd;
    double mu = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamVector m;
    ParamVector v;
    long step = 0;
};

// One agent: launch model, private RNG substream, optimizer moments.
struct AgentState {
    ParamVector w;
    RngStream rng;
    AdamState opt;
    double last_train_loss = 0.0;
};

struct TopologySpec {
    graph::TopologyKind kind = graph::TopologyKind::erdos_renyi;
    double p = 0.5;
    std::vector<std::pair<int, int>> edges;
};

struct RunConfig {
    Strategy strategy = Strategy::diffusion;
    TopologySpec topology;
    tasks::TaskDistribution tasks;
    std::optional<model::ModelSpec> model;  // required for the sine family
    meta::MetaConfig meta;
    OptimizerConfig opt;
    long iterations = 3000;
    long eval_every = 200;
    int eval_tasks = 200;
    int eval_grad_steps = 1;
    std::uint64_t seed = 1;
    bool per_agent_init = false;
    // Overrides the seeded initialization (theorem probes and tests).
    std::optional<std::vector<ParamVector>> initial_states;
};

struct RunResult {
    std::vector<ParamVector> final_states;
    std::vector<metrics::MetricsRow> rows;
    double lambda2 = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

using RowSink = std::function<void(const metrics::MetricsRow&)>;

// The per-agent training substream used by run(); exposed so equivalence
// checks can replay an agent's draws.
RngStream agent_stream(std::uint64_t seed, int agent);

// Adaptation step (Eq 6a): samples the agent's task batch, computes the
// stochastic meta-gradient, applies the outer optimizer, and returns the
// intermediate state phi. Adam moments are per-agent and never combined.
ParamVector adapt_step(AgentState& state, const meta::Objective& objective,
                       const tasks::TaskDistribution& dist, int agent,
                       const meta::MetaConfig& meta_cfg, const OptimizerConfig& opt);

// Combination step (Eq 6b): w_k = sum_l a_{lk} phi_l, accumulated in agent
// order for bit-reproducibility.
std::vector<ParamVector> combine_step(const std::vector<ParamVector>& intermediates,
                                      const graph::CombinationMatrix& a);

// Combination matrix used by a strategy: Metropolis weights on the topology
// for diffusion, the fully-connected Metropolis matrix (all 1/K) for the
// centralized strategy, the identity for non-cooperative agents.
graph::CombinationMatrix strategy_matrix(const RunConfig& cfg);

// Full synchronous training loop. Metrics rows stream through the sink as
// they are produced (so a numerical abort still flushes what exists) and are
// also collected in the result.
RunResult run(const RunConfig& cfg, const RowSink& sink = {});

// Single-agent equivalent-in-expectation reference: one worker drawing from
// the union of all agents' task distributions with a K-fold task batch.
RunResult centralized_reference(const RunConfig& cfg, const RowSink& sink = {});

const char* strategy_name(Strategy s);

}  // namespace difmaml::netsim
