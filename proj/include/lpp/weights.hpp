#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lpp {

/// A point on the probability simplex: one nonnegative weight per expert, summing to one.
class PoolWeights {
public:
    /// Tolerance on |sum - 1| accepted by the validating constructor.
    static constexpr double kSumTolerance = 1e-12;

    /// Validates that every weight lies in [0, 1] and that the weights sum to one.
    explicit PoolWeights(std::vector<double> weights);

    /// 1/K for each of K experts.
    static PoolWeights equal(std::size_t experts);

    /// Scales nonnegative, finite values with a positive sum onto the simplex.
    static PoolWeights normalized(std::vector<double> unnormalized);

    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t k) const { return weights_[k]; }
    std::span<const double> values() const noexcept { return weights_; }
    auto begin() const noexcept { return weights_.begin(); }
    auto end() const noexcept { return weights_.end(); }

    /// Index of the largest weight (first on ties).
    std::size_t argmax() const;
    double max() const { return weights_[argmax()]; }

    friend bool operator==(const PoolWeights&, const PoolWeights&) = default;

private:
    struct Trusted {};
    PoolWeights(Trusted, std::vector<double> weights) : weights_(std::move(weights)) {}

    std::vector<double> weights_;
};

}  // namespace lpp
