#include "difmaml/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "difmaml/checkpoint.hpp"
#include "difmaml/errors.hpp"

namespace difmaml::cli {

void write_csv_header(std::ostream& out) { out << kCsvHeader << "\n"; }

void write_csv_row(std::ostream& out, const metrics::MetricsRow& row) {
    out << row.iteration << ',' << row.strategy << ',' << row.agent_id << ','
        << format_double(row.train_loss) << ',' << format_double(row.test_loss) << ','
        << format_double(row.disagreement) << ','
        << format_double(row.centroid_grad_norm_sq) << ','
        << format_double(row.lambda2) << ',' << format_double(row.wall_ms) << "\n";
}

std::vector<metrics::MetricsRow> parse_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV");
    // tolerate a trailing \r from foreign line endings
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw ConfigError("unexpected CSV header: " + line);

    std::vector<metrics::MetricsRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 9)
            throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 9 fields");
        try {
            metrics::MetricsRow row;
            row.iteration = std::stol(fields[0]);
            row.strategy = fields[1];
            row.agent_id = std::stoi(fields[2]);
            row.train_loss = std::stod(fields[3]);
            row.test_loss = std::stod(fields[4]);
            row.disagreement = std::stod(fields[5]);
            row.centroid_grad_norm_sq = std::stod(fields[6]);
            row.lambda2 = std::stod(fields[7]);
            row.wall_ms = std::stod(fields[8]);
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            throw ConfigError("CSV line " + std::to_string(lineno) + ": bad value");
        }
    }
    return rows;
}

std::vector<metrics::MetricsRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv_text(ss.str());
}

}  // namespace difmaml::cli
