#pragma once

#include <lpp/density.hpp>
#include <lpp/evaluation.hpp>
#include <lpp/simulation.hpp>

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lpp {

inline constexpr std::string_view kVersion = "0.1.0";

/// Shortest text with 17 significant digits; "inf", "-inf" for infinities.
std::string format_real(double value);

/**
 * Score CSV: header `t,y,z_1,...,z_d,lp_<name1>,...,lp_<nameK>`, one row per forecast
 * event, strictly increasing integer t. Expert scores may be -inf; NaN is rejected
 * everywhere. Errors name the 1-based row (header = row 1) and the column.
 */
ScoredStream parse_score_csv(std::istream& in, const std::string& source = "<input>");
ScoredStream load_score_csv(const std::filesystem::path& path);
void write_score_csv(std::ostream& out, const ScoredStream& stream);
void write_score_csv(const std::filesystem::path& path, const ScoredStream& stream);

/// Observation CSV for built-in experts: header `t,y,z_1,...,z_d,x_1,...,x_p`.
std::vector<Observation> parse_observation_csv(std::istream& in, const std::string& source = "<input>");
std::vector<Observation> load_observation_csv(const std::filesystem::path& path);
void write_observation_csv(std::ostream& out, std::span<const Observation> observations);

/// {"type": "gaussian", "mean", "stddev"} | {"type": "student_t", "location", "scale", "dof"}
/// | {"type": "mixture", "weights": [...], "components": [...]}.
PredictiveDensity density_from_json(const nlohmann::json& j);
nlohmann::json density_to_json(const PredictiveDensity& density);

nlohmann::json to_json(const EvaluationConfig& cfg);
nlohmann::json to_json(const StudyConfig& cfg);

/// Reproduction record written next to every result set.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config;
    nlohmann::json inputs;
};

nlohmann::json to_json(const RunManifest& manifest);

/// Per-step CSV header and rows: t, y, then per scheme score/rho/scaling/one weight per expert,
/// then each expert's log score.
void write_steps_csv(std::ostream& out, const EvaluationRun& run);

/// Total pooled log score per scheme plus candidate totals.
nlohmann::json summary_json(const EvaluationRun& run);

/**
 * Writes steps.csv, candidates.csv, summary.json and manifest.json into `directory`
 * (created if needed). Throws std::runtime_error when a file cannot be written.
 */
void emit_results(const EvaluationRun& run, const RunManifest& manifest, const std::filesystem::path& directory);

/// Tidy simulation output: replication, quantity, scheme, expert, rho, z, value.
void write_study_csv(std::ostream& out, const StudyConfig& cfg, std::span<const ReplicationResult> results);

/// Error and pool-score summaries plus the polarization rate.
nlohmann::json study_summary_json(const StudyConfig& cfg, std::span<const ReplicationResult> results);

}  // namespace lpp
