#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lpp {

/// Coordinates of a forecast event in the pooling space.
using PoolingPoint = std::vector<double>;

/// One scored forecast event: where it happened, what was realized, and how each expert scored.
struct PredictionRecord {
    std::int64_t time_index = 0;
    PoolingPoint point;
    double realized_y = 0.0;
    std::vector<double> expert_log_scores;
};

/// How pooling coordinates are scaled before distances are taken.
enum class Metric {
    /// Euclidean distance on coordinates z-scored with the history's running mean and stddev.
    Standardized,
    /// Euclidean distance on raw coordinates.
    Raw,
};

struct Standardization {
    std::vector<double> mean;
    /// Population standard deviation; values below kMinStddev are reported as 1.
    std::vector<double> stddev;
};

/**
 * Time-ordered store of scored predictions, queried by the caliper.
 *
 * Append-only. Standardization statistics are running (Welford) moments of the records
 * currently held, so a query at time t never sees a record from t or later as long as the
 * caller appends the event at t only after computing its weights.
 */
class History {
public:
    static constexpr double kMinStddev = 1e-12;

    History(std::size_t dimension, std::size_t experts, Metric metric = Metric::Standardized);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t experts() const noexcept { return experts_; }
    Metric metric() const noexcept { return metric_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const PredictionRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<PredictionRecord>& records() const noexcept { return records_; }

    /// Throws ProtocolError unless the time index exceeds every stored one,
    /// DimensionError on shape mismatch, ParameterError on NaN.
    void append(PredictionRecord record);

    Standardization standardization() const;

    /// (z - mean) / stddev coordinate-wise; identity under Metric::Raw. Requires a nonempty history.
    PoolingPoint standardize(std::span<const double> z) const;

    /// Distance from z to every stored record under the history's metric, in record order.
    std::vector<double> distances(std::span<const double> z) const;

    /// Indices (ascending) of records within distance rho of z, boundary inclusive.
    std::vector<std::size_t> caliper_neighbors(std::span<const double> z, double rho) const;

private:
    void check_point(std::span<const double> z, const char* what) const;

    std::size_t dimension_;
    std::size_t experts_;
    Metric metric_;
    std::vector<PredictionRecord> records_;
    std::vector<double> running_mean_;
    std::vector<double> running_m2_;
};

/// Indices whose distance is <= rho.
std::vector<std::size_t> within_caliper(std::span<const double> distances, double rho);

}  // namespace lpp
