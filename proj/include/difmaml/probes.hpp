#pragma once

#include <string>

#include "difmaml/meta.hpp"
#include "difmaml/metrics.hpp"
#include "difmaml/netsim.hpp"
#include "difmaml/tasks.hpp"

namespace difmaml::cli {

struct ProbeResult {
    bool pass = false;
    std::string table;    // CSV table printed by the probe command
    std::string summary;  // one-line diagnostics appended before PASS/FAIL
};

// Objective perturbation law on the quadratic family over a 3x3 grid of
// (alpha, |D_in|): the J_bar/J_hat gap must match a^2 s^2 E tr(H^3) / (2|D_in|)
// to 1e-12 relative, halve when |D_in| doubles, and stay below the
// perturbation bound.
ProbeResult probe_lemma1(const tasks::TaskDistribution& dist, const meta::MetaConfig& cfg);

// Gradient perturbation: on this family grad J_bar == grad J_hat identically;
// rows carry the zero gap against the bound, and the gradient of the adjusted
// objective is cross-checked by central finite differences.
ProbeResult probe_lemma2(const tasks::TaskDistribution& dist, const meta::MetaConfig& cfg);

// Unbiasedness of the stochastic meta-gradient: the mean over n_draws
// estimator draws matches the adjusted-objective gradient within 3 standard
// errors per coordinate.
ProbeResult probe_unbiased(const tasks::TaskDistribution& dist, const meta::MetaConfig& cfg,
                           int n_draws, const ParamVector& w_probe, std::uint64_t seed);

// Steady-state network disagreement over a step-size grid on a path graph:
// log-log slope 2 +- 0.3 and plateau within 1.5x the theoretical bound.
ProbeResult probe_theorem1();

// Stationarity scaling: min-over-time centroid gradient norm squared has
// log-log slope 1 +- 0.3 in the step size, with the alpha-floor term of the
// original-objective corollary below 10% of the smallest measured value.
ProbeResult probe_theorem2();

}  // namespace difmaml::cli
