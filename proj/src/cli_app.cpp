#include "difmaml/cli_app.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "difmaml/checkpoint.hpp"
#include "difmaml/config.hpp"
#include "difmaml/csv.hpp"
#include "difmaml/errors.hpp"
#include "difmaml/probes.hpp"
#include "difmaml/svg.hpp"

namespace difmaml::cli {

int cmd_run(const std::string& config_path) {
    RunSettings settings;
    try {
        settings = build_run_settings(ConfigFile::parse_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::ofstream csv(settings.out_csv);
    if (!csv) {
        std::cerr << "config error: cannot write " << settings.out_csv << "\n";
        return 2;
    }
    write_csv_header(csv);

    netsim::RunResult result;
    try {
        result = netsim::run(settings.run, [&](const metrics::MetricsRow& row) {
            write_csv_row(csv, row);
            csv.flush();
        });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    if (result.aborted) {
        std::cerr << "numerical abort: " << result.abort_reason << "\n";
        return 3;
    }

    if (!settings.ckpt_dir.empty()) {
        std::filesystem::create_directories(settings.ckpt_dir);
        for (std::size_t k = 0; k < result.final_states.size(); ++k) {
            Checkpoint ckpt;
            ckpt.agent = static_cast<int>(k);
            ckpt.iteration = settings.run.iterations;
            ckpt.w = result.final_states[k];
            save_checkpoint(settings.ckpt_dir + "/agent_" + std::to_string(k) + ".ckpt", ckpt);
        }
    }
    std::cout << "wrote " << settings.out_csv << " (" << result.rows.size() << " rows, lambda2 "
              << result.lambda2 << ")\n";
    return 0;
}

int cmd_validate_graph(const ValidateGraphArgs& args) {
    graph::Topology topo;
    try {
        if (args.kind == "explicit") {
            if (args.edges_path.empty()) throw ConfigError("--edges required for explicit");
            // diagnose whatever the user supplies, connected or not
            topo = graph::make_topology_unchecked(args.k,
                                                  graph::read_edge_list(args.edges_path));
        } else {
            graph::TopologyKind kind;
            if (args.kind == "ring") kind = graph::TopologyKind::ring;
            else if (args.kind == "path") kind = graph::TopologyKind::path;
            else if (args.kind == "complete") kind = graph::TopologyKind::complete;
            else if (args.kind == "erdos_renyi") kind = graph::TopologyKind::erdos_renyi;
            else throw ConfigError("unknown kind: " + args.kind);
            RngStream rng(SeedKey{0xD1F}.child(static_cast<std::uint64_t>(args.k)));
            topo = graph::build_topology(kind, args.k, args.p, {}, &rng);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    const auto a = graph::metropolis_weights(topo);
    const auto report = graph::validate_combination(a);
    double lambda2 = 1.0;
    if (report.doubly_stochastic) lambda2 = graph::mixing_rate(a);

    std::printf("doubly_stochastic = %s\n", report.doubly_stochastic ? "true" : "false");
    std::printf("primitive = %s\n", report.primitive ? "true" : "false");
    std::printf("has_self_loop = %s\n", report.has_self_loop ? "true" : "false");
    std::printf("lambda2 = %.6f\n", lambda2);
    return report.doubly_stochastic && report.primitive ? 0 : 1;
}

int cmd_probe(const std::string& name, const std::string& config_path) {
    RunSettings settings;
    try {
        settings = build_run_settings(ConfigFile::parse_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    ProbeResult result;
    try {
        if (name == "lemma1") {
            result = probe_lemma1(settings.run.tasks, settings.run.meta);
        } else if (name == "lemma2") {
            result = probe_lemma2(settings.run.tasks, settings.run.meta);
        } else if (name == "unbiased") {
            const auto merged = settings.run.tasks.union_of();
            ParamVector w(static_cast<std::size_t>(
                              merged.quad_supports.at(0).tasks.at(0).dim()),
                          1.0);
            result = probe_unbiased(settings.run.tasks, settings.run.meta, 100000, w,
                                    settings.run.seed);
        } else if (name == "theorem1") {
            result = probe_theorem1();
        } else if (name == "theorem2") {
            result = probe_theorem2();
        } else {
            std::cerr << "config error: unknown probe " << name << "\n";
            return 2;
        }
    } catch (const UnsupportedFamily& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::cout << result.table;
    std::cout << "# " << result.summary << "\n";
    std::cout << (result.pass ? "PASS" : "FAIL") << "\n";
    return result.pass ? 0 : 1;
}

int cmd_plot(const std::string& csv_path, const std::string& svg_path) {
    std::vector<metrics::MetricsRow> rows;
    try {
        rows = read_csv(csv_path);
    } catch (const std::exception& e) {
        std::cerr << "malformed CSV: " << e.what() << "\n";
        return 2;
    }
    std::ofstream out(svg_path);
    if (!out) {
        std::cerr << "cannot write " << svg_path << "\n";
        return 2;
    }
    out << plot_svg(rows);
    return 0;
}

}  // namespace difmaml::cli
