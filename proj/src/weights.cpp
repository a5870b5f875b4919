#include <lpp/weights.hpp>

#include <lpp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lpp {

PoolWeights::PoolWeights(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw DimensionError("pool weights: need at least one expert");
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0 || w > 1.0)
            throw ParameterError("pool weights: weight " + std::to_string(w) + " outside [0, 1]");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw ParameterError("pool weights: sum " + std::to_string(sum) + " differs from 1");
}

PoolWeights PoolWeights::equal(std::size_t experts) {
    if (experts == 0) throw DimensionError("equal weights: need at least one expert");
    return PoolWeights(Trusted{}, std::vector<double>(experts, 1.0 / static_cast<double>(experts)));
}

PoolWeights PoolWeights::normalized(std::vector<double> unnormalized) {
    if (unnormalized.empty()) throw DimensionError("pool weights: need at least one expert");
    double sum = 0.0;
    for (double w : unnormalized) {
        if (!std::isfinite(w) || w < 0.0)
            throw ParameterError("pool weights: cannot normalize weight " + std::to_string(w));
        sum += w;
    }
    if (!(sum > 0.0)) throw ParameterError("pool weights: all weights are zero");
    for (double& w : unnormalized) w = std::min(1.0, w / sum);
    return PoolWeights(std::move(unnormalized));
}

std::size_t PoolWeights::argmax() const {
    return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
}

}  // namespace lpp
