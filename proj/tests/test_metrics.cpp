#include <doctest.h>

#include <cmath>

#include "difmaml/metrics.hpp"
#include "oracles.hpp"

using namespace difmaml;
using tasks::QuadSupport;
using tasks::QuadTask;
using tasks::Task;

namespace {

QuadTask scalar_quad(double h, double theta, double sigma) {
    QuadTask t;
    t.h = SymMatrix(1);
    t.h(0, 0) = h;
    t.theta = {theta};
    t.sigma = sigma;
    return t;
}

tasks::TaskDistribution single_quad_dist(QuadTask t) {
    tasks::TaskDistribution d;
    d.family = tasks::Family::quad;
    d.agent_count = 1;
    d.quad_supports = {{{std::move(t)}, {1.0}}};
    return d;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("centroid examples") {
    std::vector<ParamVector> same = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    auto c = metrics::centroid(same);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);

    std::vector<ParamVector> pair = {{0.0}, {2.0}};
    CHECK(metrics::centroid(pair)[0] == 1.0);

    std::vector<ParamVector> three = {{1.0}, {2.0}, {6.0}};
    CHECK(metrics::centroid(three)[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("network disagreement examples and translation invariance") {
    std::vector<ParamVector> same = {{0.5, -1.0}, {0.5, -1.0}};
    CHECK(metrics::network_disagreement(same) == 0.0);

    std::vector<ParamVector> pair = {{0.0}, {2.0}};
    CHECK(metrics::network_disagreement(pair) == doctest::Approx(1.0).epsilon(1e-15));

    RngStream rng(SeedKey{5});
    std::vector<ParamVector> states(4, ParamVector(3));
    for (auto& w : states)
        for (double& v : w) v = rng.uniform(-2.0, 2.0);
    const double base = metrics::network_disagreement(states);
    for (auto& w : states)
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += 10.0;
    CHECK(metrics::network_disagreement(states) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("theory constants at alpha=0") {
    metrics::TheoryInputs in;
    in.L = 2.0;
    in.B = 5.0;
    in.rho = 1.0;
    in.sigma_G = 1.5;
    in.sigma_H = 0.7;
    in.gamma_G = 0.3;
    in.gamma_H = 0.2;
    in.alpha = 0.0;
    in.inner_batch = 4;
    in.outer_batch = 8;
    in.task_batch = 2;
    auto c = metrics::theory_constants(in);

    CHECK(c.B_hat == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(c.L_hat == doctest::Approx(2.0).epsilon(1e-15));
    // remaining alpha terms vanish
    CHECK(c.C1_sq == doctest::Approx(6.0 * 1.5 * 1.5 / 8.0).epsilon(1e-15));
    CHECK(c.C3 == doctest::Approx(0.3 + 2.0 * 0.3 * 0.3).epsilon(1e-15));
    CHECK(c.C_sq ==
          doctest::Approx((3.0 / 2.0) * (c.C1_sq + c.C2_sq + c.C3 * c.C3)).epsilon(1e-15));
}

TEST_CASE("theory constants substitution example: B_hat=6, L_hat=3.38") {
    metrics::TheoryInputs in;
    in.L = 2.0;
    in.B = 5.0;
    in.rho = 1.0;
    in.alpha = 0.1;
    auto c = metrics::theory_constants(in);
    CHECK(c.B_hat == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(c.L_hat == doctest::Approx(3.38).epsilon(1e-14));
}

TEST_CASE("theory constants: all noise zero collapses C to zero") {
    metrics::TheoryInputs in;
    in.L = 2.0;
    in.B = 5.0;
    in.alpha = 0.1;
    auto c = metrics::theory_constants(in);
    CHECK(c.C1_sq == 0.0);
    CHECK(c.C2_sq == 0.0);
    CHECK(c.C3 == 0.0);
    CHECK(c.C_sq == 0.0);
}

TEST_CASE("disagreement bound examples") {
    CHECK(metrics::disagreement_bound(0.01, 0.0, 3.0, 0.0) == 0.0);
    // mu=0.01, lambda2=2/3, B^2+C^2=9: 1e-4 * 4 * 9 = 0.0036
    CHECK(metrics::disagreement_bound(0.01, 2.0 / 3.0, 3.0, 0.0) ==
          doctest::Approx(0.0036).epsilon(1e-12));
    const double full = metrics::disagreement_bound(0.01, 0.5, 2.0, 1.0);
    const double half = metrics::disagreement_bound(0.005, 0.5, 2.0, 1.0);
    CHECK(half == doctest::Approx(full / 4.0).epsilon(1e-14));
    CHECK_THROWS_AS(metrics::disagreement_bound(0.01, 1.0, 1.0, 0.0), LambdaOutOfRange);
}

TEST_CASE("quad theory inputs on a single-task support") {
    auto dist = single_quad_dist(scalar_quad(2.0, 0.0, 0.5));
    meta::MetaConfig cfg;
    cfg.alpha = 0.1;
    cfg.inner_batch = 10;
    cfg.outer_batch = 10;
    cfg.task_batch = 4;
    auto in = metrics::quad_theory_inputs(dist, cfg, 10.0);
    CHECK(in.L == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(in.rho == 0.0);
    CHECK(in.sigma_H == 0.0);
    CHECK(in.gamma_G == 0.0);
    CHECK(in.gamma_H == 0.0);
    CHECK(in.sigma_G == doctest::Approx(0.5 * 2.0).epsilon(1e-12));  // s*sqrt(tr(H^2))
    CHECK(in.B == doctest::Approx(2.0 * 10.0 + 1.0).epsilon(1e-12));
}

TEST_CASE("centroid gradient norm: exact quad path") {
    auto at_theta = single_quad_dist(scalar_quad(2.0, 0.7, 0.0));
    meta::MetaConfig cfg;
    cfg.alpha = 0.1;
    meta::Objective objective;
    auto est = metrics::centroid_grad_norm_sq(objective, at_theta, {0.7}, cfg, 1, SeedKey{1});
    CHECK(est.exact);
    CHECK(est.value == 0.0);

    auto origin = single_quad_dist(scalar_quad(2.0, 0.0, 0.0));
    auto est2 = metrics::centroid_grad_norm_sq(objective, origin, {1.0}, cfg, 1, SeedKey{1});
    CHECK(est2.value == doctest::Approx(1.6384).epsilon(1e-14));
}

TEST_CASE("centroid gradient norm: sigma=0 Monte-Carlo path equals the exact path") {
    auto dist = single_quad_dist(scalar_quad(2.0, 0.0, 0.0));
    meta::MetaConfig cfg;
    cfg.alpha = 0.1;
    cfg.inner_batch = 3;
    cfg.outer_batch = 3;
    meta::Objective objective;
    auto exact = metrics::centroid_grad_norm_sq(objective, dist, {1.0}, cfg, 1, SeedKey{2});
    auto mc = metrics::centroid_grad_norm_sq_mc(objective, dist, {1.0}, cfg, 16, SeedKey{2});
    CHECK(mc.value == doctest::Approx(exact.value).epsilon(1e-13));
    CHECK(mc.correction <= 1e-25);
}

TEST_CASE("bias-corrected Monte-Carlo estimate is consistent on a noisy quad") {
    auto dist = single_quad_dist(scalar_quad(2.0, 0.0, 1.0));
    meta::MetaConfig cfg;
    cfg.alpha = 0.1;
    cfg.inner_batch = 10;
    cfg.outer_batch = 10;
    meta::Objective objective;
    const ParamVector w = {1.0};
    auto exact = metrics::centroid_grad_norm_sq(objective, dist, w, cfg, 1, SeedKey{3});

    // average several estimates; the corrected estimator should hover near
    // the exact value instead of inheriting the +var/n bias
    double acc = 0.0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
        auto est = metrics::centroid_grad_norm_sq_mc(objective, dist, w, cfg, 400,
                                                     SeedKey{100 + static_cast<std::uint64_t>(r)});
        CHECK(est.correction > 0.0);
        acc += est.value;
    }
    acc /= reps;
    CHECK(acc == doctest::Approx(exact.value).epsilon(0.02));
}

TEST_CASE("meta_test: grad_steps=0 returns the launch query loss only") {
    auto task = scalar_quad(2.0, 0.0, 0.0);
    std::vector<Task> tasks_list = {Task{task}};
    meta::MetaConfig cfg;
    cfg.alpha = 0.5;
    cfg.inner_batch = 4;
    meta::Objective objective;
    auto losses = metrics::meta_test(objective, {1.0}, tasks_list, cfg, 0, SeedKey{4});
    REQUIRE(losses.size() == 1);
    // sigma=0 quad query loss at w=1: 0.5*2*1
    CHECK(losses[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("meta_test: exact isotropic step reaches zero loss after one step") {
    QuadTask task;
    task.h = SymMatrix::diag(std::vector<double>{3.0, 3.0});
    task.theta = {0.4, -0.2};
    task.sigma = 0.0;
    std::vector<Task> tasks_list = {Task{task}};
    meta::MetaConfig cfg;
    cfg.alpha = 1.0 / 3.0;
    cfg.inner_batch = 4;
    meta::Objective objective;
    auto losses = metrics::meta_test(objective, {2.0, 1.0}, tasks_list, cfg, 3, SeedKey{5});
    REQUIRE(losses.size() == 4);
    CHECK(losses[0] > 0.0);
    for (std::size_t s = 1; s < losses.size(); ++s)
        CHECK(losses[s] <= 1e-25);
}

TEST_CASE("perturbation probe rows satisfy the bounds; sigma=0 rows vanish") {
    QuadTask noisy;
    noisy.h = SymMatrix::diag(std::vector<double>{1.0, 2.0});
    noisy.theta = {0.3, -0.2};
    noisy.sigma = 1.0;
    auto dist = single_quad_dist(noisy);
    meta::MetaConfig cfg;
    cfg.outer_batch = 10;

    const std::vector<double> alphas = {0.05, 0.1, 0.2};
    const std::vector<int> batches = {5, 10, 20};
    const ParamVector w = {0.8, 0.3};
    auto rows = metrics::perturbation_probe(dist, cfg, alphas, batches, w, 10.0);
    REQUIRE(rows.size() == 9);
    for (const auto& row : rows) {
        CHECK(row.obj_gap >= 0.0);
        CHECK(row.obj_gap <= row.obj_bound);
        CHECK(row.grad_gap == 0.0);
        CHECK(row.grad_gap <= row.grad_bound);
    }

    auto clean = single_quad_dist(scalar_quad(2.0, 0.0, 0.0));
    auto zero_rows = metrics::perturbation_probe(clean, cfg, alphas, batches, {0.5}, 10.0);
    for (const auto& row : zero_rows) {
        CHECK(row.obj_gap == 0.0);
        CHECK(row.grad_gap == 0.0);
    }
}

TEST_CASE("perturbation probe rejects the sine family") {
    tasks::TaskDistribution sine;
    sine.family = tasks::Family::sine;
    sine.agent_count = 1;
    meta::MetaConfig cfg;
    const std::vector<double> alphas = {0.1};
    const std::vector<int> batches = {5};
    CHECK_THROWS_AS(
        metrics::perturbation_probe(sine, cfg, alphas, batches, {0.0}, 10.0),
        UnsupportedFamily);
}

}
