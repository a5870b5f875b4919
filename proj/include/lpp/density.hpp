#pragma once

#include <lpp/weights.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace lpp {

/// Generator used for every stochastic routine; one instance per worker.
using Rng = std::mt19937_64;

struct Gaussian {
    double mean;
    double stddev;
};

struct StudentT {
    double location;
    double scale;
    double dof;
};

class PredictiveDensity;

struct Mixture {
    PoolWeights weights;
    std::vector<PredictiveDensity> components;
};

/**
 * Univariate predictive distribution: Gaussian, location-scale Student-t, or a finite
 * mixture of those. Parameters are validated on construction and the value is immutable
 * afterwards, so instances can be shared freely between threads.
 */
class PredictiveDensity {
public:
    using Variant = std::variant<Gaussian, StudentT, Mixture>;

    static PredictiveDensity gaussian(double mean, double stddev);
    static PredictiveDensity student_t(double location, double scale, double dof);
    static PredictiveDensity mixture(PoolWeights weights, std::vector<PredictiveDensity> components);

    const Variant& variant() const noexcept { return value_; }
    bool is_mixture() const noexcept { return std::holds_alternative<Mixture>(value_); }

    /// Log pdf at y in nats; -infinity where the density is zero. NaN y is rejected.
    double log_density(double y) const;

    /// One draw. Mixtures pick a component by weight, then draw from it.
    double sample(Rng& rng) const;

    double mean() const;
    /// Infinite for Student-t with dof <= 2 (or any mixture containing one).
    double variance() const;

private:
    explicit PredictiveDensity(Variant v) : value_(std::move(v)) {}

    Variant value_;
};

/// log(sum_i exp(x_i)) with max-subtraction. Empty input or all -inf gives -inf.
double log_sum_exp(std::span<const double> values);

/**
 * Log score of the linear pool sum_k w_k p_k(y), given each expert's log density at y.
 * Experts with zero weight are skipped, so a -infinity score under zero weight is harmless.
 */
double pooled_log_density(const PoolWeights& weights, std::span<const double> expert_log_densities);

}  // namespace lpp
