#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lpp {

/// Row-major T x K matrix of log scores: one row per forecast event, one column per expert.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    explicit ScoreMatrix(std::size_t experts) : experts_(experts) {}

    std::size_t rows() const noexcept { return experts_ == 0 ? 0 : data_.size() / experts_; }
    std::size_t experts() const noexcept { return experts_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> row(std::size_t t) const { return {data_.data() + t * experts_, experts_}; }
    double operator()(std::size_t t, std::size_t k) const { return data_[t * experts_ + k]; }

    /// Appends one row; throws DimensionError on a length mismatch and ParameterError on NaN.
    void push_row(std::span<const double> scores);
    void reserve(std::size_t rows) { data_.reserve(rows * experts_); }

private:
    std::size_t experts_ = 0;
    std::vector<double> data_;
};

}  // namespace lpp
