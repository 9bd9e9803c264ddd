#pragma once

#include <set>
#include <utility>
#include <vector>

#include "difmaml/rng.hpp"
#include "difmaml/vecmath.hpp"

namespace difmaml::graph {

// Undirected network topology over K agents; self-loops are implicit.
struct Topology {
    int agent_count = 0;
    std::set<std::pair<int, int>> edges;  // pairs with first < second

    bool has_edge(int u, int v) const;
    int degree(int k) const;  // neighbor count, excluding the node itself
    bool connected() const;
};

enum class TopologyKind { ring, path, complete, erdos_renyi, explicit_edges };

// Builds a connected topology. Erdos-Renyi draws edges with probability p and
// retries until connected; explicit mode throws Disconnected when the edge
// list does not connect the graph.
Topology build_topology(TopologyKind kind, int agent_count, double p = 0.5,
                        const std::vector<std::pair<int, int>>& edges = {},
                        RngStream* rng = nullptr);

// Topology without the connectivity gate, for diagnosing arbitrary graphs.
Topology make_topology_unchecked(int agent_count,
                                 const std::vector<std::pair<int, int>>& edges);

// Edge-list text format: one "u v" pair per line, 0-based indices; blank
// lines and '#' comments are skipped.
std::vector<std::pair<int, int>> read_edge_list(const std::string& path);

// K x K doubly-stochastic combination weights a[l][k]: the weight agent k
// gives to neighbor l's intermediate state.
struct CombinationMatrix {
    int agent_count = 0;
    std::vector<double> a;  // row-major, a[l * K + k]

    static CombinationMatrix identity(int k);
    static CombinationMatrix uniform(int k);  // all entries 1/K

    double& at(int l, int k) { return a[static_cast<std::size_t>(l) * agent_count + k]; }
    double at(int l, int k) const { return a[static_cast<std::size_t>(l) * agent_count + k]; }
};

// Metropolis rule: a_{lk} = 1 / max(n_k, n_l) for neighbors, where n counts
// the node itself; diagonal absorbs the remainder. Symmetric and doubly
// stochastic for any topology.
CombinationMatrix metropolis_weights(const Topology& t);

struct ValidationReport {
    bool doubly_stochastic = false;  // rows and columns sum to 1 within 1e-12
    bool primitive = false;
    bool has_self_loop = false;

    bool all_pass() const { return doubly_stochastic && primitive && has_self_loop; }
};

ValidationReport validate_combination(const CombinationMatrix& m);

// Mixing rate lambda_2: spectral radius of A' - (1/K) 1 1', computed by power
// iteration with the all-ones direction deflated. Throws NoConvergence after
// 10^6 iterations and LambdaOutOfRange if the input is not doubly stochastic.
double mixing_rate(const CombinationMatrix& m);

}  // namespace difmaml::graph
