#pragma once

#include <lpp/density.hpp>
#include <lpp/dgp.hpp>
#include <lpp/pooling_space.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace lpp {

/// Caliper estimate of each expert's local ELPD at one query point.
struct LocalElpdEstimate {
    /// Mean in-caliper log score per expert, in nats; all zero when the caliper is empty.
    std::vector<double> estimate;
    std::size_t neighbor_count = 0;
    double rho = 0.0;
};

/**
 * Average historical log score of every expert over the records within distance rho of z.
 * An empty caliper yields an estimate of exactly zero for every expert, which the softmax
 * turns into equal weights.
 */
LocalElpdEstimate caliper_elpd(const History& history, std::span<const double> z, double rho);

/// Same estimator over a precomputed neighbor set (indices into history).
LocalElpdEstimate caliper_elpd(const History& history, std::span<const std::size_t> neighbors, double rho);

/// Gauss-Hermite rule for integrals against exp(-x^2) (physicists' convention).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point rule via the Golub-Welsch eigenvalue method; cached per n, thread-safe.
const GaussHermiteRule& gauss_hermite(std::size_t n);

inline constexpr std::size_t kDefaultQuadratureNodes = 64;

/// E[log p(Y)] for Y ~ N(mean, stddev^2), by Gauss-Hermite quadrature.
double expected_log_score(const PredictiveDensity& predictive, GaussianConditional law,
                          std::size_t nodes = kDefaultQuadratureNodes);

/// True local ELPD of a predictive density at z under the data-generating process.
double true_local_elpd(const PredictiveDensity& predictive, std::span<const double> z, const DgpConfig& dgp,
                       std::size_t nodes = kDefaultQuadratureNodes);

}  // namespace lpp
