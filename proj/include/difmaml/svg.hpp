#pragma once

#include <string>
#include <vector>

#include "difmaml/metrics.hpp"

namespace difmaml::cli {

// Self-contained SVG line chart of test_loss against iteration (or gradient
// step for meta-test tables), one polyline per strategy, built from the
// aggregate (agent_id == -1) rows. No external assets.
std::string plot_svg(const std::vector<metrics::MetricsRow>& rows);

}  // namespace difmaml::cli
