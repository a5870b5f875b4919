#pragma once

#include <lpp/experts.hpp>
#include <lpp/pooling_space.hpp>
#include <lpp/pools.hpp>
#include <lpp/weights.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lpp {

enum class Scheme { LocalDm, Equal, GlobalOpt, LocalOpt };

inline constexpr std::array kAllSchemes{Scheme::LocalDm, Scheme::Equal, Scheme::GlobalOpt, Scheme::LocalOpt};

/// "local_dm", "equal", "global_opt", "local_opt".
std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

/// Caliper width standing in for "everything": larger than any standardized distance in practice.
inline constexpr double kGlobalCaliper = 1e9;

std::vector<double> default_rho_grid();
std::vector<ScalingRule> default_scaling_grid();

/**
 * Three-batch rolling protocol. Rows [0, warmup) only train the experts. Rows
 * [warmup, warmup + history) are scored and recorded, and hyperparameter candidates are
 * scored on them, but nothing is reported. Every later row is a reported evaluation step.
 */
struct EvaluationConfig {
    std::size_t warmup_size = 0;
    std::size_t history_size = 0;
    std::vector<double> rho_grid = default_rho_grid();
    /// Candidate softmax scalings for the local DM pool, in tie-break order.
    std::vector<ScalingRule> scaling_grid = default_scaling_grid();
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    Metric metric = Metric::Standardized;
    OptimizerOptions optimizer;
    std::uint64_t seed = 0;
};

/// Throws ParameterError/ProtocolError for empty grids, bad values, or a stream that is too short.
void validate(const EvaluationConfig& cfg, std::size_t stream_length);

/// Forecast events with each expert's log score at the realized outcome.
struct ScoredStream {
    std::vector<std::int64_t> times;
    std::vector<PoolingPoint> points;
    std::vector<double> outcomes;
    ExpertScoreTable scores;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dimension() const noexcept { return points.empty() ? 0 : points.front().size(); }
    /// First `rows` events.
    ScoredStream prefix(std::size_t rows) const;
};

/// Rectangular, strictly increasing times, consistent point dimension, no NaN.
void validate(const ScoredStream& stream);

/// Raw observation for built-in experts: pooling point, expert covariates, outcome.
struct Observation {
    std::int64_t time_index = 0;
    PoolingPoint point;
    std::vector<double> covariates;
    double y = 0.0;
};

/// Predict-then-update pass: row t holds every expert's log density at y_t computed from
/// data strictly before t. The experts are left updated on the whole stream.
ScoredStream score_experts(std::span<const Observation> observations, std::vector<RegressionExpert>& experts);

struct SchemeStep {
    Scheme scheme = Scheme::Equal;
    /// Caliper width in force (local schemes only).
    std::optional<double> rho;
    /// Softmax scaling in force (local DM only).
    std::optional<ScalingRule> scaling;
    PoolWeights weights = PoolWeights::equal(1);
    double log_score = 0.0;
};

struct StepResult {
    std::int64_t time_index = 0;
    double realized_y = 0.0;
    std::vector<SchemeStep> schemes;
    std::vector<double> expert_log_scores;

    /// The entry for a scheme; IndexError when it was not run.
    const SchemeStep& at(Scheme scheme) const;
};

/// One hyperparameter candidate of a local scheme, run as a shadow pool over the whole stream.
struct CandidateTotal {
    Scheme scheme = Scheme::LocalDm;
    double rho = 0.0;
    std::optional<ScalingRule> scaling;
    /// Sum of the candidate's pooled log scores over the history-building batch.
    double history_total = 0.0;
    /// Same over the reported evaluation steps.
    double evaluation_total = 0.0;
    /// Number of evaluation steps at which the candidate was the selected one.
    std::size_t times_selected = 0;
};

struct EvaluationRun {
    std::vector<std::string> expert_names;
    std::vector<StepResult> steps;
    std::vector<CandidateTotal> candidates;
};

/// Rolling one-step-ahead evaluation over precomputed expert scores.
EvaluationRun rolling_evaluate(const ScoredStream& stream, const EvaluationConfig& cfg);

/// Same, scoring built-in experts causally first.
EvaluationRun rolling_evaluate(std::span<const Observation> observations, std::vector<RegressionExpert> experts,
                               const EvaluationConfig& cfg);

/**
 * Index of the candidate with the largest cumulative pooled log score. Ties go to the
 * earlier candidate; with no scored steps yet the first candidate is returned.
 */
std::size_t select_hyperparameters(std::span<const double> cumulative, std::size_t scored_steps);

/// Running sums of each scheme's pooled log score over the steps.
std::map<Scheme, std::vector<double>> cumulative_scores(std::span<const StepResult> steps);

}  // namespace lpp
