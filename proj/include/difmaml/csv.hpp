#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "difmaml/metrics.hpp"

namespace difmaml::cli {

inline constexpr const char* kCsvHeader =
    "iteration,strategy,agent_id,train_loss,test_loss,disagreement,"
    "centroid_grad_norm_sq,lambda2,wall_ms";

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const metrics::MetricsRow& row);

// Reads a metrics CSV back; throws ConfigError on malformed input.
std::vector<metrics::MetricsRow> read_csv(const std::string& path);
std::vector<metrics::MetricsRow> parse_csv_text(const std::string& text);

}  // namespace difmaml::cli
