#include <CLI11.hpp>

#include "difmaml/cli_app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Dif-MAML decentralized meta-learning simulator"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "train per a config file, emit CSV + checkpoints");
    run->add_option("config", config_path, "config file path")->required();

    difmaml::cli::ValidateGraphArgs graph_args;
    auto* validate = app.add_subcommand("validate-graph", "check combination-matrix assumptions");
    validate->add_option("--kind", graph_args.kind, "ring|path|complete|erdos_renyi|explicit");
    validate->add_option("--k", graph_args.k, "agent count")->required();
    validate->add_option("--p", graph_args.p, "edge probability (erdos_renyi)");
    validate->add_option("--edges", graph_args.edges_path, "edge list file (explicit)");

    std::string probe_name, probe_config;
    auto* probe = app.add_subcommand("probe", "run a lemma/theorem verification probe");
    probe->add_option("name", probe_name, "lemma1|lemma2|theorem1|theorem2|unbiased")->required();
    probe->add_option("config", probe_config, "config file path")->required();

    std::string csv_path, svg_path;
    auto* plot = app.add_subcommand("plot", "render a metrics CSV as an SVG line chart");
    plot->add_option("csv", csv_path, "input CSV")->required();
    plot->add_option("svg", svg_path, "output SVG")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return difmaml::cli::cmd_run(config_path);
    if (validate->parsed()) return difmaml::cli::cmd_validate_graph(graph_args);
    if (probe->parsed()) return difmaml::cli::cmd_probe(probe_name, probe_config);
    if (plot->parsed()) return difmaml::cli::cmd_plot(csv_path, svg_path);
    return 2;
}
