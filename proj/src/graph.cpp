#include "difmaml/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "difmaml/errors.hpp"

namespace difmaml::graph {

namespace {

std::pair<int, int> ordered(int u, int v) { return u < v ? std::pair{u, v} : std::pair{v, u}; }

}  // namespace

bool Topology::has_edge(int u, int v) const {
    if (u == v) return false;
    return edges.count(ordered(u, v)) > 0;
}

int Topology::degree(int k) const {
    int d = 0;
    for (const auto& [u, v] : edges)
        if (u == k || v == k) ++d;
    return d;
}

bool Topology::connected() const {
    if (agent_count <= 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(agent_count), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (const auto& [a, b] : edges) {
            const int other = a == u ? b : (b == u ? a : -1);
            if (other >= 0 && !seen[static_cast<std::size_t>(other)]) {
                seen[static_cast<std::size_t>(other)] = 1;
                ++reached;
                q.push(other);
            }
        }
    }
    return reached == agent_count;
}

Topology make_topology_unchecked(int agent_count,
                                 const std::vector<std::pair<int, int>>& edges) {
    Topology t;
    t.agent_count = agent_count;
    for (auto [u, v] : edges) {
        if (u == v) continue;
        if (u < 0 || v < 0 || u >= agent_count || v >= agent_count)
            throw BadAgentIndex("edge endpoint out of range");
        t.edges.insert(ordered(u, v));
    }
    return t;
}

std::vector<std::pair<int, int>> read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open edge list: " + path);
    std::vector<std::pair<int, int>> edges;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ss(line);
        int u = 0, v = 0;
        if (ss >> u) {
            if (!(ss >> v)) throw ConfigError("malformed edge line: " + line);
            edges.emplace_back(u, v);
        }
    }
    return edges;
}

Topology build_topology(TopologyKind kind, int agent_count, double p,
                        const std::vector<std::pair<int, int>>& edges, RngStream* rng) {
    if (agent_count < 1) throw ConfigError("agent count must be >= 1");
    Topology t;
    t.agent_count = agent_count;
    switch (kind) {
        case TopologyKind::ring:
            for (int i = 0; i < agent_count; ++i)
                if (agent_count > 1) t.edges.insert(ordered(i, (i + 1) % agent_count));
            break;
        case TopologyKind::path:
            for (int i = 0; i + 1 < agent_count; ++i) t.edges.insert({i, i + 1});
            break;
        case TopologyKind::complete:
            for (int i = 0; i < agent_count; ++i)
                for (int j = i + 1; j < agent_count; ++j) t.edges.insert({i, j});
            break;
        case TopologyKind::erdos_renyi: {
            RngStream local(SeedKey{0});
            RngStream& r = rng ? *rng : local;
            for (int attempt = 0; attempt < 100000; ++attempt) {
                t.edges.clear();
                for (int i = 0; i < agent_count; ++i)
                    for (int j = i + 1; j < agent_count; ++j)
                        if (r.uniform() < p) t.edges.insert({i, j});
                if (t.connected()) return t;
            }
            throw NoConvergence("no connected Erdos-Renyi draw found");
        }
        case TopologyKind::explicit_edges:
            t = make_topology_unchecked(agent_count, edges);
            if (!t.connected()) throw Disconnected("explicit edge list is not connected");
            return t;
    }
    return t;
}

CombinationMatrix CombinationMatrix::identity(int k) {
    CombinationMatrix m;
    m.agent_count = k;
    m.a.assign(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) m.at(i, i) = 1.0;
    return m;
}

CombinationMatrix CombinationMatrix::uniform(int k) {
    CombinationMatrix m;
    m.agent_count = k;
    m.a.assign(static_cast<std::size_t>(k) * k, 1.0 / k);
    return m;
}

CombinationMatrix metropolis_weights(const Topology& t) {
    const int k = t.agent_count;
    CombinationMatrix m;
    m.agent_count = k;
    m.a.assign(static_cast<std::size_t>(k) * k, 0.0);

    std::vector<int> n(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) n[static_cast<std::size_t>(i)] = t.degree(i) + 1;

    for (const auto& [u, v] : t.edges) {
        const double w = 1.0 / std::max(n[static_cast<std::size_t>(u)], n[static_cast<std::size_t>(v)]);
        m.at(u, v) = w;
        m.at(v, u) = w;
    }
    for (int i = 0; i < k; ++i) {
        double off = 0.0;
        for (int j = 0; j < k; ++j)
            if (j != i) off += m.at(j, i);
        m.at(i, i) = 1.0 - off;
    }
    return m;
}

namespace {

// Boolean matrix product over the support pattern.
std::vector<char> bool_multiply(const std::vector<char>& x, const std::vector<char>& y, int k) {
    std::vector<char> out(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i < k; ++i)
        for (int l = 0; l < k; ++l) {
            if (!x[static_cast<std::size_t>(i) * k + l]) continue;
            for (int j = 0; j < k; ++j)
                if (y[static_cast<std::size_t>(l) * k + j]) out[static_cast<std::size_t>(i) * k + j] = 1;
        }
    return out;
}

bool all_positive(const std::vector<char>& x) {
    return std::all_of(x.begin(), x.end(), [](char c) { return c != 0; });
}

}  // namespace

ValidationReport validate_combination(const CombinationMatrix& m) {
    const int k = m.agent_count;
    ValidationReport report;

    bool ds = true;
    for (int i = 0; i < k && ds; ++i) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < k; ++j) {
            if (m.at(i, j) < 0.0) ds = false;
            row += m.at(i, j);
            col += m.at(j, i);
        }
        if (std::abs(row - 1.0) > 1e-12 || std::abs(col - 1.0) > 1e-12) ds = false;
    }
    report.doubly_stochastic = ds;

    for (int i = 0; i < k; ++i)
        if (m.at(i, i) > 0.0) report.has_self_loop = true;

    // Primitivity on the support pattern: irreducibility via (S + I)^{K-1},
    // then positivity of some power S^m with m bounded by Wielandt's K^2-2K+2.
    std::vector<char> support(static_cast<std::size_t>(k) * k, 0);
    std::vector<char> support_loop(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const char s = m.at(i, j) > 0.0 ? 1 : 0;
            support[static_cast<std::size_t>(i) * k + j] = s;
            support_loop[static_cast<std::size_t>(i) * k + j] = (i == j) ? 1 : s;
        }

    std::vector<char> reach(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i < k; ++i) reach[static_cast<std::size_t>(i) * k + i] = 1;
    for (int step = 0; step < k - 1; ++step) reach = bool_multiply(reach, support_loop, k);
    const bool irreducible = all_positive(reach);

    bool primitive = false;
    if (irreducible) {
        const int cap = k * k - 2 * k + 2;
        std::vector<char> power = support;
        for (int mth = 1; mth <= std::max(cap, 1); ++mth) {
            if (all_positive(power)) {
                primitive = true;
                break;
            }
            power = bool_multiply(power, support, k);
        }
    }
    report.primitive = primitive;
    return report;
}

double mixing_rate(const CombinationMatrix& m) {
    const int k = m.agent_count;
    if (!validate_combination(m).doubly_stochastic)
        throw LambdaOutOfRange("mixing rate requires a doubly-stochastic matrix");
    if (k == 1) return 0.0;

    // b = A' v - mean(v); the all-ones direction is in the kernel and is
    // re-deflated every iteration to stop numerical drift.
    std::vector<double> v(static_cast<std::size_t>(k));
    std::vector<double> next(static_cast<std::size_t>(k));
    RngStream rng(SeedKey{0x5eed});
    for (double& x : v) x = rng.uniform(-1.0, 1.0);

    auto deflate = [&](std::vector<double>& x) {
        double mean = 0.0;
        for (double e : x) mean += e;
        mean /= k;
        for (double& e : x) e -= mean;
    };
    deflate(v);
    double vn = norm(v);
    if (vn == 0.0) {
        v[0] = 1.0;
        deflate(v);
        vn = norm(v);
    }
    for (double& e : v) e /= vn;

    double prev_estimate = -1.0;
    const long cap = 1000000;
    for (long it = 0; it < cap; ++it) {
        for (int i = 0; i < k; ++i) {
            // (A' v)_i = sum_j a_{ji} v_j
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += m.at(j, i) * v[static_cast<std::size_t>(j)];
            next[static_cast<std::size_t>(i)] = s;
        }
        deflate(next);
        const double estimate = norm(next);  // ||B v|| with ||v|| = 1
        if (estimate < 1e-300) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = next[i] / estimate;
        if (prev_estimate >= 0.0 && std::abs(estimate - prev_estimate) <=
                                        1e-10 * std::max(1.0, estimate))
            return estimate;
        prev_estimate = estimate;
    }
    throw NoConvergence("power iteration did not converge");
}

}  // namespace difmaml::graph
