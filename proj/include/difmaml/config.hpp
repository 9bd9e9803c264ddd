#pragma once

#include <map>
#include <string>

#include "difmaml/netsim.hpp"

namespace difmaml::cli {

// Flat key-value experiment configuration: one `key = value` per line, `#`
// comments, UTF-8. Unknown keys are a hard error. Every optional key has a
// documented default (see the README table).
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;

    std::string serialize() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

struct RunSettings {
    netsim::RunConfig run;
    std::string out_csv = "metrics.csv";
    std::string ckpt_dir;
    std::string edges_path;  // explicit topologies only
};

// Validates keys and materializes the full run configuration, including the
// built-in quadratic-family distribution when tasks.family = quad.
RunSettings build_run_settings(const ConfigFile& cfg);

// Round-trips a run configuration back to config text (defaults included).
std::string serialize_settings(const RunSettings& s);

}  // namespace difmaml::cli
