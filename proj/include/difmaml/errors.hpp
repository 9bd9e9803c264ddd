#pragma once

#include <stdexcept>
#include <string>

namespace difmaml {

// Error taxonomy shared across modules. The CLI maps these onto exit codes;
// everything else lets them propagate.
struct NonFiniteValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadAgentIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Disconnected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedFamily : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LambdaOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace difmaml
