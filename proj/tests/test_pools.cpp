#include "oracles.hpp"

#include <lpp/errors.hpp>
#include <lpp/pools.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lpp;

namespace {

LocalElpdEstimate est(std::vector<double> v, std::size_t n = 10) { return {std::move(v), n, 1.0}; }

/// Best two-expert pool on the grid w in {0, step, ..., 1}.
double grid_best_w(const ScoreMatrix& s, double step) {
    double best_w = 0.0, best = -INFINITY;
    const int n = static_cast<int>(std::lround(1.0 / step));
    for (int i = 0; i <= n; ++i) {
        const double w = static_cast<double>(i) / n;
        double total = 0.0;
        for (std::size_t t = 0; t < s.rows(); ++t)
            total += static_cast<double>(oracle::log_pool_long(std::vector{w, 1.0 - w}, s.row(t)));
        if (total > best) best = total, best_w = w;
    }
    return best_w;
}

}  // namespace

TEST_SUITE("pools") {

TEST_CASE("equal weights") {
    CHECK(equal_weights(1).values()[0] == 1.0);
    const PoolWeights four = equal_weights(4);
    for (double w : four) CHECK(w == 0.25);
    const PoolWeights three = equal_weights(3);
    CHECK(three[0] + three[1] + three[2] == 1.0);
    CHECK_THROWS_AS(equal_weights(0), DimensionError);
}

TEST_CASE("softmax example") {
    const PoolWeights w = softmax_weights(est({-1.0, -2.0}), FixedScaling{1.0});
    CHECK(w[0] == doctest::Approx(0.73106).epsilon(1e-5));
    CHECK(w[1] == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(w[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
}

TEST_CASE("softmax limits") {
    CHECK(softmax_weights(est({-1.0, -50.0, 3.0}), FixedScaling{0.0}) == equal_weights(3));
    CHECK(softmax_weights(est({0.0, 0.0}, 0), NaturalScaling{}) == equal_weights(2));
    const PoolWeights sharp = softmax_weights(est({-1.0, -1.01}), FixedScaling{1e6});
    CHECK(sharp.max() > 1.0 - 1e-9);
    CHECK(sharp.argmax() == 0);
    CHECK(softmax_weights(est({-1e6, -1e6 - 1e3}), FixedScaling{1e3})[0] == 1.0);
}

TEST_CASE("natural scaling multiplies by the neighbor count") {
    const PoolWeights nat = softmax_weights(est({-1.2, -1.3}, 37), NaturalScaling{});
    const PoolWeights fixed = softmax_weights(est({-1.2, -1.3}, 37), FixedScaling{37.0});
    CHECK(nat[0] == doctest::Approx(fixed[0]).epsilon(1e-15));
    CHECK(nat[0] == doctest::Approx(1.0 / (1.0 + std::exp(-3.7))).epsilon(1e-14));
}

TEST_CASE("softmax is shift invariant and order preserving") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(-1.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> e(4);
        for (double& x : e) x = z(rng);
        std::vector<double> shifted = e;
        for (double& x : shifted) x += 123.4;
        const PoolWeights a = softmax_weights(est(e), FixedScaling{2.0});
        const PoolWeights b = softmax_weights(est(shifted), FixedScaling{2.0});
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-10));
            for (std::size_t j = 0; j < 4; ++j)
                if (e[j] > e[k]) CHECK(a[j] > a[k]);
        }
    }
}

TEST_CASE("scaling rules round trip through text") {
    CHECK(std::holds_alternative<NaturalScaling>(parse_scaling("natural")));
    CHECK(std::get<FixedScaling>(parse_scaling("2.5")).tau == 2.5);
    CHECK(to_string(parse_scaling(to_string(FixedScaling{0.5}))) == to_string(FixedScaling{0.5}));
    CHECK_THROWS_AS(parse_scaling("-1"), ParameterError);
    CHECK_THROWS_AS(parse_scaling("abc"), ParameterError);
}

TEST_CASE("optimizer: a uniformly better expert takes all the weight") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(-1.0, 0.5);
    std::uniform_real_distribution<double> gap(0.05, 1.0);
    ScoreMatrix s(2);
    for (int t = 0; t < 30; ++t) {
        const double a = z(rng);
        s.push_row(std::vector{a, a - gap(rng)});
    }
    const OptimizerResult r = optimize_pool_weights(s);
    CHECK(r.weights[0] > 1.0 - 1e-6);
    CHECK(std::abs(r.weights[0] - grid_best_w(s, 1e-4)) < 1e-6);
}

TEST_CASE("optimizer: symmetric scores give equal weights") {
    const OptimizerResult r = optimize_pool_weights(oracle::matrix({{0.0, -10.0}, {-10.0, 0.0}}));
    CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("optimizer matches a simplex grid search") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 5; ++rep) {
        const ScoreMatrix s = oracle::random_scores(rng, 20, 3);
        const OptimizerResult r = optimize_pool_weights(s);
        const oracle::SimplexGrid3 grid(s);
        const auto coarse = grid.search(1000);
        const auto fine = grid.refine(coarse, 1e-3, 4);
        CHECK(r.objective >= coarse.value - 1e-6);
        CHECK(std::abs(r.objective - fine.value) < 1e-6);
        CHECK(r.objective == doctest::Approx(pool_objective(r.weights, s)).epsilon(1e-14));
    }
}

TEST_CASE("optimizer objective never decreases and dominates every expert") {
    std::mt19937_64 rng(78);
    OptimizerOptions opts;
    opts.record_trace = true;
    for (int rep = 0; rep < 20; ++rep) {
        const ScoreMatrix s = oracle::random_scores(rng, 40, 4);
        const OptimizerResult r = optimize_pool_weights(s, opts);
        REQUIRE(r.trace.size() == static_cast<std::size_t>(r.iterations) + 1);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
        for (std::size_t k = 0; k < 4; ++k) {
            double single = 0.0;
            for (std::size_t t = 0; t < s.rows(); ++t) single += s(t, k);
            CHECK(r.objective >= single);
        }
    }
}

TEST_CASE("optimizer reaches optima on faces of the simplex") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> experts(2, 6), rows(1, 60);
    OptimizerOptions exhaustive;
    exhaustive.relative_tolerance = 0.0;
    exhaustive.max_iterations = 200000;
    for (int rep = 0; rep < 150; ++rep) {
        const ScoreMatrix s = oracle::random_scores(rng, rows(rng), experts(rng));
        const OptimizerResult r = optimize_pool_weights(s);
        CHECK(r.objective >= optimize_pool_weights(s, exhaustive).objective - 1e-9);
        for (std::size_t k = 0; k < s.experts(); ++k) {
            double single = 0.0;
            for (std::size_t t = 0; t < s.rows(); ++t) single += s(t, k);
            CHECK(r.objective >= single);
        }
    }
}

TEST_CASE("optimizer: a strictly dominated expert gets negligible weight") {
    std::mt19937_64 rng(5);
    ScoreMatrix base = oracle::random_scores(rng, 25, 2);
    ScoreMatrix s(3);
    for (std::size_t t = 0; t < base.rows(); ++t)
        s.push_row(std::vector{base(t, 0), base(t, 1), std::max(base(t, 0), base(t, 1)) - 2.0});
    CHECK(optimize_pool_weights(s).weights[2] < 1e-6);
}

TEST_CASE("optimizer input errors") {
    CHECK_THROWS_AS(optimize_pool_weights(ScoreMatrix(2)), DimensionError);
    CHECK_THROWS_AS(optimize_pool_weights(ScoreMatrix()), DimensionError);
}

TEST_CASE("optimizer tolerates rows where an expert has zero density") {
    const double ninf = -INFINITY;
    const OptimizerResult r = optimize_pool_weights(oracle::matrix({{-1.0, ninf}, {-2.0, -1.0}, {ninf, -0.5}}));
    CHECK(std::isfinite(r.objective));
    CHECK(r.weights[0] > 0.0);
    CHECK(r.weights[1] > 0.0);
}

TEST_CASE("local optimization") {
    History h(1, 2, Metric::Raw);
    // Near zero expert 2 is better; far away expert 1 is.
    for (int i = 0; i < 20; ++i) {
        const double z = i < 10 ? 0.01 * i : 10.0 + 0.01 * i;
        const double lp2 = i < 10 ? -1.0 : -3.0;
        h.append({i, {z}, 0.0, {-2.0 - 0.01 * i, lp2}});
    }
    CHECK(local_opt_weights(h, std::vector{-100.0}, 1.0) == equal_weights(2));
    CHECK(local_opt_weights(h, std::vector{0.0}, 1e9) == optimize_pool_weights(history_scores(h)).weights);
    const PoolWeights near = local_opt_weights(h, std::vector{0.05}, 0.5);
    CHECK(near[1] > 1.0 - 1e-6);
    const auto rows = h.caliper_neighbors(std::vector{0.05}, 0.5);
    CHECK(rows.size() == 10);
    CHECK(std::abs(near[0] - grid_best_w(history_scores(h, rows), 1e-4)) < 1e-6);
}

TEST_CASE("assembled pools") {
    const auto a = PredictiveDensity::gaussian(0, 1);
    const auto b = PredictiveDensity::student_t(2, 0.5, 5);
    const PredictiveDensity first = assemble_pool(PoolWeights({1.0, 0.0}), {a, b});
    CHECK(first.log_density(0.7) == a.log_density(0.7));
    const PredictiveDensity same = assemble_pool(equal_weights(3), {b, b, b});
    CHECK(same.log_density(1.1) == doctest::Approx(b.log_density(1.1)).epsilon(1e-15));

    const PoolWeights w({0.3, 0.7});
    const PredictiveDensity pool = assemble_pool(w, {a, b});
    for (double y : {-3.0, 0.0, 1.9, 6.0})
        CHECK(std::abs(pool.log_density(y) - pooled_log_density(w, std::vector{a.log_density(y), b.log_density(y)})) < 1e-12);
    CHECK_THROWS_AS(assemble_pool(w, {a}), DimensionError);
}

}  // TEST_SUITE
