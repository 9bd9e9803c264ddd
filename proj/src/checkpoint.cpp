#include "difmaml/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "difmaml/errors.hpp"

namespace difmaml::cli {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("float formatting failed");
    return std::string(buf, ptr);
}

std::string checkpoint_to_text(const Checkpoint& ckpt) {
    std::ostringstream out;
    out << "DIFMAML-CKPT v1\n";
    out << "dim=" << ckpt.w.size() << " agent=" << ckpt.agent << " iter=" << ckpt.iteration
        << "\n";
    for (std::size_t i = 0; i < ckpt.w.size(); ++i) {
        if (i) out << ' ';
        out << format_double(ckpt.w[i]);
    }
    out << "\n";
    return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header) || header != "DIFMAML-CKPT v1")
        throw ConfigError("bad checkpoint header");

    std::string meta;
    if (!std::getline(in, meta)) throw ConfigError("missing checkpoint metadata");
    Checkpoint ckpt;
    std::size_t dim = 0;
    {
        std::istringstream ms(meta);
        std::string field;
        while (ms >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw ConfigError("bad checkpoint field: " + field);
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            if (key == "dim") dim = std::stoul(value);
            else if (key == "agent") ckpt.agent = std::stoi(value);
            else if (key == "iter") ckpt.iteration = std::stol(value);
            else throw ConfigError("unknown checkpoint field: " + key);
        }
    }

    ckpt.w.reserve(dim);
    std::string tok;
    while (in >> tok) {
        double v = 0.0;
        const char* begin = tok.data();
        const char* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end)
            throw ConfigError("bad checkpoint value: " + tok);
        ckpt.w.push_back(v);
    }
    if (ckpt.w.size() != dim) throw ConfigError("checkpoint value count mismatch");
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << checkpoint_to_text(ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_text(ss.str());
}

}  // namespace difmaml::cli
