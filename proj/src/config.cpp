#include "difmaml/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "difmaml/errors.hpp"

namespace difmaml::cli {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "strategy",
        "topology.kind", "topology.k", "topology.p", "topology.edges_path",
        "tasks.family", "tasks.sigma", "tasks.k_agents",
        "model.layers",
        "meta.alpha", "meta.inner_steps", "meta.inner_batch", "meta.outer_batch",
        "meta.task_batch",
        "opt.kind", "opt.mu", "opt.beta1", "opt.beta2", "opt.eps",
        "run.iterations", "run.eval_every", "run.eval_tasks", "run.eval_grad_steps",
        "run.seed",
        "out.csv", "out.ckpt_dir",
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known_keys().count(key))
            throw ConfigError("unknown config key: " + key);
        if (cfg.values_.count(key)) throw ConfigError("duplicate config key: " + key);
        cfg.values_[key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not a number: " + it->second);
    }
}

long ConfigFile::get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stol(it->second);
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not an integer: " + it->second);
    }
}

std::string ConfigFile::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

namespace {

// Built-in quadratic desk family: every agent owns one task with the shared
// Hessian diag(1 + i/M) and an agent-specific optimum spread along the
// all-ones direction, theta_k = s_k * 1 with s_k in [-1, 1].
tasks::TaskDistribution make_quad_distribution(int k_agents, int dim, double sigma) {
    tasks::TaskDistribution dist;
    dist.family = tasks::Family::quad;
    dist.agent_count = k_agents;
    std::vector<double> diag(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        diag[static_cast<std::size_t>(i)] = 1.0 + static_cast<double>(i) / dim;
    const SymMatrix h = SymMatrix::diag(diag);
    for (int k = 0; k < k_agents; ++k) {
        const double s =
            k_agents == 1 ? 0.0 : (2.0 * k - (k_agents - 1)) / (k_agents - 1.0);
        tasks::QuadTask t;
        t.h = h;
        t.theta.assign(static_cast<std::size_t>(dim), s);
        t.sigma = sigma;
        dist.quad_supports.push_back({{t}, {1.0}});
    }
    return dist;
}

}  // namespace

RunSettings build_run_settings(const ConfigFile& cfg) {
    RunSettings s;
    netsim::RunConfig& run = s.run;

    const std::string strategy = cfg.get_string("strategy", "diffusion");
    if (strategy == "diffusion") run.strategy = netsim::Strategy::diffusion;
    else if (strategy == "centralized") run.strategy = netsim::Strategy::centralized;
    else if (strategy == "non_cooperative") run.strategy = netsim::Strategy::non_cooperative;
    else throw ConfigError("unknown strategy: " + strategy);

    const int k_agents = static_cast<int>(cfg.get_long("tasks.k_agents", 6));
    if (k_agents < 1) throw ConfigError("tasks.k_agents must be >= 1");
    const long topo_k = cfg.get_long("topology.k", k_agents);
    if (topo_k != k_agents)
        throw ConfigError("topology.k must match tasks.k_agents");

    const std::string kind = cfg.get_string("topology.kind", "erdos_renyi");
    if (kind == "ring") run.topology.kind = graph::TopologyKind::ring;
    else if (kind == "path") run.topology.kind = graph::TopologyKind::path;
    else if (kind == "complete") run.topology.kind = graph::TopologyKind::complete;
    else if (kind == "erdos_renyi") run.topology.kind = graph::TopologyKind::erdos_renyi;
    else if (kind == "explicit") run.topology.kind = graph::TopologyKind::explicit_edges;
    else throw ConfigError("unknown topology.kind: " + kind);
    run.topology.p = cfg.get_double("topology.p", 0.5);
    if (run.topology.kind == graph::TopologyKind::explicit_edges) {
        s.edges_path = cfg.get_string("topology.edges_path", "");
        if (s.edges_path.empty())
            throw ConfigError("explicit topology needs topology.edges_path");
        run.topology.edges = graph::read_edge_list(s.edges_path);
    }

    const std::string family = cfg.get_string("tasks.family", "sine");
    const std::string layers = cfg.get_string("model.layers", family == "sine" ? "1,40,40,1" : "3");
    const std::vector<int> layer_sizes = parse_int_list(layers);
    if (family == "sine") {
        run.tasks.family = tasks::Family::sine;
        run.tasks.agent_count = k_agents;
        if (layer_sizes.size() < 2) throw ConfigError("model.layers needs at least 2 sizes");
        model::ModelSpec spec;
        spec.layer_sizes = layer_sizes;
        spec.activation = model::Activation::relu;
        run.model = spec;
    } else if (family == "quad") {
        if (layer_sizes.size() != 1 || layer_sizes[0] < 1)
            throw ConfigError("quad family takes model.layers = <dimension>");
        run.tasks = make_quad_distribution(k_agents, layer_sizes[0],
                                           cfg.get_double("tasks.sigma", 1.0));
    } else {
        throw ConfigError("unknown tasks.family: " + family);
    }

    run.meta.alpha = cfg.get_double("meta.alpha", 0.01);
    run.meta.inner_steps = static_cast<int>(cfg.get_long("meta.inner_steps", 1));
    run.meta.inner_batch = static_cast<int>(cfg.get_long("meta.inner_batch", 10));
    run.meta.outer_batch = static_cast<int>(cfg.get_long("meta.outer_batch", 10));
    run.meta.task_batch = static_cast<int>(cfg.get_long("meta.task_batch", 5));
    run.meta.validate();

    const std::string opt = cfg.get_string("opt.kind", "adam");
    if (opt == "sgd") {
        run.opt.kind = netsim::OptKind::sgd;
        run.opt.mu = cfg.get_double("opt.mu", 0.005);
    } else if (opt == "adam") {
        run.opt.kind = netsim::OptKind::adam;
        run.opt.mu = cfg.get_double("opt.mu", 0.001);
    } else {
        throw ConfigError("unknown opt.kind: " + opt);
    }
    run.opt.beta1 = cfg.get_double("opt.beta1", 0.9);
    run.opt.beta2 = cfg.get_double("opt.beta2", 0.999);
    run.opt.eps = cfg.get_double("opt.eps", 1e-8);

    run.iterations = cfg.get_long("run.iterations", 3000);
    run.eval_every = cfg.get_long("run.eval_every", 200);
    run.eval_tasks = static_cast<int>(cfg.get_long("run.eval_tasks", 200));
    run.eval_grad_steps = static_cast<int>(cfg.get_long("run.eval_grad_steps", 1));
    run.seed = static_cast<std::uint64_t>(cfg.get_long("run.seed", 1));
    if (run.iterations < 0) throw ConfigError("run.iterations must be >= 0");
    if (run.eval_every < 1) throw ConfigError("run.eval_every must be >= 1");
    if (run.eval_tasks < 1) throw ConfigError("run.eval_tasks must be >= 1");
    if (run.eval_grad_steps < 0) throw ConfigError("run.eval_grad_steps must be >= 0");

    s.out_csv = cfg.get_string("out.csv", "metrics.csv");
    s.ckpt_dir = cfg.get_string("out.ckpt_dir", "");
    return s;
}

std::string serialize_settings(const RunSettings& s) {
    const netsim::RunConfig& run = s.run;
    std::ostringstream out;
    out << "strategy = " << netsim::strategy_name(run.strategy) << "\n";
    switch (run.topology.kind) {
        case graph::TopologyKind::ring: out << "topology.kind = ring\n"; break;
        case graph::TopologyKind::path: out << "topology.kind = path\n"; break;
        case graph::TopologyKind::complete: out << "topology.kind = complete\n"; break;
        case graph::TopologyKind::erdos_renyi: out << "topology.kind = erdos_renyi\n"; break;
        case graph::TopologyKind::explicit_edges: out << "topology.kind = explicit\n"; break;
    }
    out << "topology.k = " << run.tasks.agent_count << "\n";
    out << "topology.p = " << run.topology.p << "\n";
    if (!s.edges_path.empty()) out << "topology.edges_path = " << s.edges_path << "\n";
    out << "tasks.family = " << (run.tasks.family == tasks::Family::sine ? "sine" : "quad") << "\n";
    if (run.tasks.family == tasks::Family::quad)
        out << "tasks.sigma = " << run.tasks.quad_supports.at(0).tasks.at(0).sigma << "\n";
    out << "tasks.k_agents = " << run.tasks.agent_count << "\n";
    out << "model.layers = ";
    if (run.model) {
        for (std::size_t i = 0; i < run.model->layer_sizes.size(); ++i)
            out << (i ? "," : "") << run.model->layer_sizes[i];
    } else {
        out << run.tasks.quad_supports.at(0).tasks.at(0).dim();
    }
    out << "\n";
    out << "meta.alpha = " << run.meta.alpha << "\n";
    out << "meta.inner_steps = " << run.meta.inner_steps << "\n";
    out << "meta.inner_batch = " << run.meta.inner_batch << "\n";
    out << "meta.outer_batch = " << run.meta.outer_batch << "\n";
    out << "meta.task_batch = " << run.meta.task_batch << "\n";
    out << "opt.kind = " << (run.opt.kind == netsim::OptKind::sgd ? "sgd" : "adam") << "\n";
    out << "opt.mu = " << run.opt.mu << "\n";
    out << "opt.beta1 = " << run.opt.beta1 << "\n";
    out << "opt.beta2 = " << run.opt.beta2 << "\n";
    out << "opt.eps = " << run.opt.eps << "\n";
    out << "run.iterations = " << run.iterations << "\n";
    out << "run.eval_every = " << run.eval_every << "\n";
    out << "run.eval_tasks = " << run.eval_tasks << "\n";
    out << "run.eval_grad_steps = " << run.eval_grad_steps << "\n";
    out << "run.seed = " << run.seed << "\n";
    out << "out.csv = " << s.out_csv << "\n";
    if (!s.ckpt_dir.empty()) out << "out.ckpt_dir = " << s.ckpt_dir << "\n";
    return out.str();
}

}  // namespace difmaml::cli
