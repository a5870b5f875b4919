#include "oracles.hpp"

#include <lpp/errors.hpp>
#include <lpp/local_elpd.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lpp;

namespace {

History scored_history() {
    History h(1, 2, Metric::Raw);
    h.append({0, {0.0}, 0.0, {-1.0, -0.5}});
    h.append({1, {0.3}, 0.0, {-3.0, -2.5}});
    h.append({2, {5.0}, 0.0, {-7.0, -0.1}});
    return h;
}

const double kEntropy = -0.5 * std::log(2.0 * std::numbers::pi) - 0.5;

}  // namespace

TEST_SUITE("local_elpd") {

TEST_CASE("caliper estimate is the in-caliper mean") {
    const LocalElpdEstimate e = caliper_elpd(scored_history(), std::vector{0.1}, 1.0);
    CHECK(e.neighbor_count == 2);
    CHECK(e.estimate[0] == -2.0);
    CHECK(e.estimate[1] == -1.5);
    CHECK(e.rho == 1.0);
}

TEST_CASE("empty caliper gives zero for every expert") {
    const LocalElpdEstimate e = caliper_elpd(scored_history(), std::vector{-50.0}, 1.0);
    CHECK(e.neighbor_count == 0);
    CHECK(e.estimate == std::vector{0.0, 0.0});
}

TEST_CASE("a caliper spanning every record gives the global mean") {
    const LocalElpdEstimate e = caliper_elpd(scored_history(), std::vector{0.0}, 1e9);
    CHECK(e.neighbor_count == 3);
    CHECK(e.estimate[0] == doctest::Approx(-11.0 / 3.0).epsilon(1e-15));
    CHECK(e.estimate[1] == doctest::Approx(-3.1 / 3.0).epsilon(1e-15));
}

TEST_CASE("estimates lie within the range of in-caliper scores") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    History h(2, 3);
    for (int i = 0; i < 200; ++i) h.append({i, {z(rng), z(rng)}, 0.0, {z(rng) - 1, 2 * z(rng) - 1, z(rng) - 3}});
    for (double rho : {0.2, 0.5, 1.0}) {
        const std::vector q{0.3, -0.2};
        const auto nb = h.caliper_neighbors(q, rho);
        REQUIRE(!nb.empty());
        const LocalElpdEstimate e = caliper_elpd(h, q, rho);
        for (std::size_t k = 0; k < 3; ++k) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t i : nb) lo = std::min(lo, h[i].expert_log_scores[k]), hi = std::max(hi, h[i].expert_log_scores[k]);
            CHECK(e.estimate[k] >= lo);
            CHECK(e.estimate[k] <= hi);
        }
    }
}

TEST_CASE("a record outside the caliper does not change the estimate") {
    History h = scored_history();
    const LocalElpdEstimate before = caliper_elpd(h, std::vector{0.1}, 1.0);
    h.append({3, {40.0}, 0.0, {-100.0, -200.0}});
    const LocalElpdEstimate after = caliper_elpd(h, std::vector{0.1}, 1.0);
    CHECK(before.estimate == after.estimate);
    CHECK(before.neighbor_count == after.neighbor_count);
}

TEST_CASE("gauss hermite rule integrates low moments exactly") {
    for (std::size_t n : {8u, 64u, 128u}) {
        const GaussHermiteRule& r = gauss_hermite(n);
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            m0 += r.weights[i];
            m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
            m4 += r.weights[i] * std::pow(r.nodes[i], 4);
        }
        const double sp = std::sqrt(std::numbers::pi);
        CHECK(m0 == doctest::Approx(sp).epsilon(1e-13));
        CHECK(m2 == doctest::Approx(sp / 2).epsilon(1e-13));
        CHECK(m4 == doctest::Approx(3 * sp / 4).epsilon(1e-12));
    }
}

TEST_CASE("true local ELPD of the exact conditional is the Gaussian entropy") {
    const DgpConfig dgp;
    const std::vector z{0.3, -1.2};
    const auto exact = PredictiveDensity::gaussian(z[0] + z[1], 1.0);
    CHECK(true_local_elpd(exact, z, dgp) == doctest::Approx(kEntropy).epsilon(1e-12));
    CHECK(true_local_elpd(exact, z, dgp) == doctest::Approx(-1.4189).epsilon(1e-4));
}

TEST_CASE("a shifted Gaussian loses half the squared shift") {
    const DgpConfig dgp;
    const std::vector z{2.0, 0.0};
    for (double delta : {0.5, 2.0}) {
        const auto shifted = PredictiveDensity::gaussian(2.0 + delta, 1.0);
        CHECK(true_local_elpd(shifted, z, dgp) == doctest::Approx(kEntropy - delta * delta / 2).epsilon(1e-12));
    }
    CHECK(true_local_elpd(PredictiveDensity::gaussian(4.0, 1.0), z, dgp) == doctest::Approx(-3.4189).epsilon(1e-4));
}

TEST_CASE("student t expected log score agrees with Monte Carlo") {
    const DgpConfig dgp;
    const std::vector z{1.0, 0.5};
    const auto pred = PredictiveDensity::student_t(1.2, 1.3, 4.0);
    const double quad = true_local_elpd(pred, z, dgp);

    std::mt19937_64 rng(31);
    std::normal_distribution<double> y(1.5, 1.0);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = pred.log_density(y(rng));
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(quad - mean) < 3.0 * se);
}

TEST_CASE("doubling the quadrature nodes changes the oracle by less than 1e-8") {
    const DgpConfig dgp;
    for (const auto& pred : {PredictiveDensity::student_t(0.4, 1.6, 20.0), PredictiveDensity::student_t(-1.0, 1.0, 3.0),
                             PredictiveDensity::gaussian(0.5, 1.8)}) {
        const std::vector z{2.0, 0.0};
        CHECK(std::abs(true_local_elpd(pred, z, dgp, 64) - true_local_elpd(pred, z, dgp, 128)) < 1e-8);
    }
}

TEST_CASE("non-Gaussian conditionals are unsupported") {
    DgpConfig dgp;
    dgp.noise = NoiseFamily::Laplace;
    CHECK_THROWS_AS(true_local_elpd(PredictiveDensity::gaussian(0, 1), std::vector{0.0, 0.0}, dgp), UnsupportedDgpError);
    dgp = DgpConfig{};
    dgp.noise_sd = 0.0;
    CHECK_THROWS_AS(true_local_elpd(PredictiveDensity::gaussian(0, 1), std::vector{0.0, 0.0}, dgp), UnsupportedDgpError);
}

}  // TEST_SUITE
