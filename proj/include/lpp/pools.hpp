#pragma once

#include <lpp/density.hpp>
#include <lpp/local_elpd.hpp>
#include <lpp/pooling_space.hpp>
#include <lpp/score_matrix.hpp>
#include <lpp/weights.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lpp {

/// Scale the local ELPD estimates by the in-caliper count n_rho(z).
struct NaturalScaling {
    friend bool operator==(NaturalScaling, NaturalScaling) = default;
};

/// Scale the local ELPD estimates by a fixed factor tau >= 0.
struct FixedScaling {
    double tau = 1.0;
    friend bool operator==(FixedScaling, FixedScaling) = default;
};

using ScalingRule = std::variant<NaturalScaling, FixedScaling>;

/// "natural" or the tau value; parse_scaling accepts the same spellings.
std::string to_string(const ScalingRule& rule);
ScalingRule parse_scaling(const std::string& text);

PoolWeights equal_weights(std::size_t experts);

/**
 * Softmax of s * estimate_k with s = n_rho (natural) or tau (fixed), evaluated with
 * max-subtraction. s = 0, or estimates that are all equal, give exactly 1/K.
 */
PoolWeights softmax_weights(const LocalElpdEstimate& estimate, const ScalingRule& rule);

struct OptimizerOptions {
    /// Stop when (f_new - f_old) / |f_old| falls below this.
    double relative_tolerance = 1e-10;
    int max_iterations = 5000;
    /// Weights below this after an update are set to zero before renormalizing.
    double clamp_below = 1e-300;
    bool record_trace = false;
};

struct OptimizerResult {
    PoolWeights weights;
    /// sum_t log sum_k w_k exp(score_tk) at the returned weights.
    double objective;
    int iterations;
    bool converged;
    /// Objective before the first update and after every iteration (when requested).
    std::vector<double> trace;
};

/// Total log score of the linear pool over all rows.
double pool_objective(const PoolWeights& weights, const ScoreMatrix& scores);

/**
 * Maximizes the total historical log score of a linear pool over the simplex with EM
 * (mixture-weight) updates from equal weights. Each update is a responsibility-weighted
 * average, so iterates stay on the simplex and the objective never decreases. EM is slow
 * when the optimum sits on a face, so its answer is finished with active-set Newton steps
 * that are only accepted when they improve the objective.
 */
OptimizerResult optimize_pool_weights(const ScoreMatrix& scores, const OptimizerOptions& options = {});

/// Copies the given history rows into a score matrix.
ScoreMatrix history_scores(const History& history, std::span<const std::size_t> rows);
ScoreMatrix history_scores(const History& history);

/// Optimized pool over only the records inside the caliper; equal weights if it is empty.
PoolWeights local_opt_weights(const History& history, std::span<const double> z, double rho,
                              const OptimizerOptions& options = {});
PoolWeights local_opt_weights(const History& history, std::span<const std::size_t> neighbors,
                              const OptimizerOptions& options = {});

/// The pooled predictive distribution sum_k w_k p_k.
PredictiveDensity assemble_pool(const PoolWeights& weights, std::vector<PredictiveDensity> densities);

}  // namespace lpp
