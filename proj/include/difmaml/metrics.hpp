#pragma once

#include <span>
#include <string>
#include <vector>

#include "difmaml/meta.hpp"
#include "difmaml/tasks.hpp"
#include "difmaml/vecmath.hpp"

namespace difmaml::metrics {

// One evaluation record. agent_id == -1 marks the centroid/aggregate row.
struct MetricsRow {
    long iteration = 0;
    std::string strategy;
    int agent_id = -1;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double disagreement = 0.0;
    double centroid_grad_norm_sq = 0.0;
    double lambda2 = 0.0;
    double wall_ms = 0.0;
};

ParamVector centroid(std::span<const ParamVector> states);

// (1/K) sum_k ||w_k - w_c||^2
double network_disagreement(std::span<const ParamVector> states);

// Assumption constants and the derived bound constants of the analysis.
struct TheoryInputs {
    double L = 0.0;
    double rho = 0.0;
    double B = 0.0;
    double sigma_G = 0.0;
    double sigma_H = 0.0;
    double gamma_G = 0.0;
    double gamma_H = 0.0;
    double alpha = 0.0;
    int inner_batch = 1;  // |D_in|
    int outer_batch = 1;  // |D_o|
    int task_batch = 1;   // |S_k|
};

struct TheoryConstants {
    TheoryInputs in;
    double B_hat = 0.0;   // (1 + aL) B
    double L_hat = 0.0;   // L (1 + aL)^2 + a rho B
    double C1_sq = 0.0;
    double C2_sq = 0.0;
    double C3 = 0.0;
    double C_sq = 0.0;    // (3 / |S_k|) (C1^2 + C2^2 + C3^2)
};

TheoryConstants theory_constants(const TheoryInputs& in);

// Assumption constants of a quadratic-family distribution, measured on the
// ball ||w - theta_t|| <= radius per task (the bounded-gradient assumption
// cannot hold globally for quadratics).
TheoryInputs quad_theory_inputs(const tasks::TaskDistribution& dist,
                                const meta::MetaConfig& cfg, double radius);

// Steady-state network disagreement bound: mu^2 lambda2^2 (B_hat^2 + C^2) / (1 - lambda2)^2
double disagreement_bound(double mu, double lambda2, double b_hat, double c_sq);

struct GradNormEstimate {
    double value = 0.0;
    double correction = 0.0;  // subtracted Monte-Carlo variance term
    bool exact = false;
};

// E ||grad J_hat(w_c)||^2 against the network-wide aggregate objective.
// Quadratic family: exact. Sine family: bias-corrected Monte-Carlo plug-in
// over n_mc stochastic meta-gradients with tasks from the union distribution.
GradNormEstimate centroid_grad_norm_sq(const meta::Objective& objective,
                                       const tasks::TaskDistribution& dist,
                                       const ParamVector& w_c,
                                       const meta::MetaConfig& cfg, int n_mc,
                                       SeedKey seed);

// Monte-Carlo route regardless of family (the quadratic families use it to
// cross-check the exact path).
GradNormEstimate centroid_grad_norm_sq_mc(const meta::Objective& objective,
                                          const tasks::TaskDistribution& dist,
                                          const ParamVector& w_c,
                                          const meta::MetaConfig& cfg, int n_mc,
                                          SeedKey seed);

// Aggregate adjusted objective (1/K) sum_k J_hat_k(w) for quad distributions.
double aggregate_adjusted_objective_quad(const tasks::TaskDistribution& dist,
                                         const ParamVector& w, double alpha,
                                         int inner_batch);

// Few-shot evaluation: for each task, one support batch (cfg.inner_batch
// shots) and a disjoint 100-point query batch; grad_steps adaptation steps of
// size alpha on the support; returns mean query loss after 0..grad_steps
// steps, averaged over tasks.
std::vector<double> meta_test(const meta::Objective& objective, const ParamVector& launch,
                              std::span<const tasks::Task> test_tasks,
                              const meta::MetaConfig& cfg, int grad_steps, SeedKey seed);

// Lemma probe table over an (alpha, |D_in|) grid. The objective gap is exact
// on this family; the gradient gap is identically zero because the
// adjustment is constant in w (documented with the bound for completeness).
struct PerturbationRow {
    double alpha = 0.0;
    int inner_batch = 0;
    double obj_gap = 0.0;
    double obj_bound = 0.0;
    double grad_gap = 0.0;
    double grad_bound = 0.0;
};

std::vector<PerturbationRow> perturbation_probe(const tasks::TaskDistribution& dist,
                                                const meta::MetaConfig& cfg,
                                                std::span<const double> alphas,
                                                std::span<const int> inner_batches,
                                                const ParamVector& w_probe, double radius);

}  // namespace difmaml::metrics
