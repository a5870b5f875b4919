#include <lpp/score_matrix.hpp>

#include <lpp/errors.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace lpp {

void ScoreMatrix::push_row(std::span<const double> scores) {
    if (scores.size() != experts_)
        throw DimensionError("score row has " + std::to_string(scores.size()) + " entries, expected " +
                             std::to_string(experts_));
    for (double s : scores)
        if (std::isnan(s) || s == std::numeric_limits<double>::infinity())
            throw ParameterError("score row contains NaN or +infinity");
    data_.insert(data_.end(), scores.begin(), scores.end());
}

}  // namespace lpp
