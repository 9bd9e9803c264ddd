#pragma once

#include <string>
#include <vector>

namespace difmaml::cli {

// Exit codes: 0 success, 1 failed validation/probe, 2 config error,
// 3 numerical abort (partial CSV flushed).
int cmd_run(const std::string& config_path);

struct ValidateGraphArgs {
    std::string kind = "complete";
    int k = 6;
    double p = 0.5;
    std::string edges_path;
};

int cmd_validate_graph(const ValidateGraphArgs& args);

int cmd_probe(const std::string& name, const std::string& config_path);

int cmd_plot(const std::string& csv_path, const std::string& svg_path);

}  // namespace difmaml::cli
