#include <lpp/pooling_space.hpp>

#include <lpp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lpp {

History::History(std::size_t dimension, std::size_t experts, Metric metric)
    : dimension_(dimension), experts_(experts), metric_(metric), running_mean_(dimension, 0.0), running_m2_(dimension, 0.0) {
    if (dimension == 0) throw DimensionError("history: pooling space must have at least one coordinate");
    if (experts == 0) throw DimensionError("history: need at least one expert");
}

void History::check_point(std::span<const double> z, const char* what) const {
    if (z.size() != dimension_)
        throw DimensionError(std::string(what) + ": point has " + std::to_string(z.size()) +
                             " coordinates, pooling space has " + std::to_string(dimension_));
    for (double c : z)
        if (!std::isfinite(c)) throw ParameterError(std::string(what) + ": non-finite pooling coordinate");
}

void History::append(PredictionRecord record) {
    check_point(record.point, "history append");
    if (record.expert_log_scores.size() != experts_)
        throw DimensionError("history append: " + std::to_string(record.expert_log_scores.size()) +
                             " expert scores, expected " + std::to_string(experts_));
    for (double s : record.expert_log_scores)
        if (std::isnan(s) || s == std::numeric_limits<double>::infinity())
            throw ParameterError("history append: expert log score is NaN or +infinity");
    if (std::isnan(record.realized_y)) throw ParameterError("history append: realized outcome is NaN");
    if (record.time_index < 0) throw ProtocolError("history append: negative time index");
    if (!records_.empty() && record.time_index <= records_.back().time_index)
        throw ProtocolError("history append: time index " + std::to_string(record.time_index) +
                            " does not exceed " + std::to_string(records_.back().time_index));

    const double n = static_cast<double>(records_.size() + 1);
    for (std::size_t j = 0; j < dimension_; ++j) {
        const double delta = record.point[j] - running_mean_[j];
        running_mean_[j] += delta / n;
        running_m2_[j] += delta * (record.point[j] - running_mean_[j]);
    }
    records_.push_back(std::move(record));
}

Standardization History::standardization() const {
    Standardization s{running_mean_, std::vector<double>(dimension_, 1.0)};
    if (records_.empty()) return s;
    const double n = static_cast<double>(records_.size());
    for (std::size_t j = 0; j < dimension_; ++j) {
        const double sd = std::sqrt(std::max(0.0, running_m2_[j] / n));
        s.stddev[j] = sd < kMinStddev ? 1.0 : sd;
    }
    return s;
}

PoolingPoint History::standardize(std::span<const double> z) const {
    check_point(z, "standardize");
    if (metric_ == Metric::Raw) return PoolingPoint(z.begin(), z.end());
    if (records_.empty()) throw ProtocolError("standardize: empty history");
    const Standardization s = standardization();
    PoolingPoint out(dimension_);
    for (std::size_t j = 0; j < dimension_; ++j) out[j] = (z[j] - s.mean[j]) / s.stddev[j];
    return out;
}

std::vector<double> History::distances(std::span<const double> z) const {
    check_point(z, "caliper query");
    std::vector<double> out;
    if (records_.empty()) return out;
    out.reserve(records_.size());
    std::vector<double> scale(dimension_, 1.0);
    if (metric_ == Metric::Standardized) scale = standardization().stddev;
    // Centering cancels in differences, so only the scale matters.
    for (const PredictionRecord& r : records_) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dimension_; ++j) {
            const double diff = (r.point[j] - z[j]) / scale[j];
            d2 += diff * diff;
        }
        out.push_back(std::sqrt(d2));
    }
    return out;
}

std::vector<std::size_t> History::caliper_neighbors(std::span<const double> z, double rho) const {
    return within_caliper(distances(z), rho);
}

std::vector<std::size_t> within_caliper(std::span<const double> distances, double rho) {
    if (!(rho > 0.0)) throw ParameterError("caliper width must be > 0");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < distances.size(); ++i)
        if (distances[i] <= rho) out.push_back(i);
    return out;
}

}  // namespace lpp
