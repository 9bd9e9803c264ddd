#pragma once

#include <string>

#include "difmaml/vecmath.hpp"

namespace difmaml::cli {

struct Checkpoint {
    int agent = 0;
    long iteration = 0;
    ParamVector w;
};

// Text checkpoint, bit-exact round trip: floats are written with their
// shortest round-trip decimal representation.
//
//   DIFMAML-CKPT v1
//   dim=<M> agent=<k> iter=<i>
//   <M whitespace-separated decimals>
std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace difmaml::cli
