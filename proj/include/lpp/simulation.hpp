#pragma once

#include <lpp/dgp.hpp>
#include <lpp/evaluation.hpp>
#include <lpp/experts.hpp>
#include <lpp/pools.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lpp {

/// Caliper widths for the estimator-error study: the local range, where widening trades variance for bias.
std::vector<double> default_error_rho_grid();
/// Caliper widths for the pool comparison, up to one that holds every observation.
std::vector<double> default_pool_rho_grid();

/**
 * Monte Carlo study of the two-expert linear example. Each replication draws
 * dgp.sample_size observations, trains one regression expert per covariate (each reads only
 * its own covariate) on the first training_size of them, then scores the frozen experts on
 * the remainder to build the history the caliper works on.
 */
struct StudyConfig {
    DgpConfig dgp;
    std::size_t training_size = 1000;
    std::size_t replications = 500;
    std::vector<double> error_rho_grid = default_error_rho_grid();
    std::vector<double> pool_rho_grid = default_pool_rho_grid();
    std::vector<PoolingPoint> eval_points{{0.0, 0.0}, {2.0, 0.0}};
    NigPrior prior;
    std::size_t quadrature_nodes = kDefaultQuadratureNodes;
    /// The example's pooling space is already standard normal, so raw distances are used.
    Metric metric = Metric::Raw;
    OptimizerOptions optimizer;
};

void validate(const StudyConfig& cfg);

/// Everything one replication contributes. Outer indices follow cfg.eval_points, then the
/// relevant caliper grid.
struct ReplicationResult {
    std::size_t replication = 0;
    /// [point][expert] true local ELPD of the frozen expert.
    std::vector<std::vector<double>> true_elpd;
    /// [point][error rho][expert] caliper estimates.
    std::vector<std::vector<std::vector<double>>> caliper_estimate;
    /// [point][error rho]
    std::vector<std::vector<std::size_t>> neighbor_count;
    /// [point][pool rho] expected log score of the local DM pool (natural scaling).
    std::vector<std::vector<double>> local_dm_score;
    /// [point][pool rho] expected log score of the locally optimized pool.
    std::vector<std::vector<double>> local_opt_score;
    /// [point]
    std::vector<double> equal_score;
    std::vector<double> global_opt_score;
    /// Largest expert weight of the natural-scaling pool whose caliper holds the whole history.
    double global_natural_max_weight = 0.0;
};

/// Independent per-replication generator derived from the study seed and replication index.
Rng replication_rng(std::uint64_t seed, std::size_t replication);

/// The frozen experts and scored history of one replication.
struct ReplicationFit {
    std::vector<RegressionExpert> experts;
    History history;
};

ReplicationFit fit_replication(const StudyConfig& cfg, std::size_t replication);
ReplicationResult run_replication(const StudyConfig& cfg, std::size_t replication);

/// All replications, in replication order.
std::vector<ReplicationResult> run_study(const StudyConfig& cfg);

struct SampleSummary {
    std::size_t count = 0;
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator).
    double stddev = 0.0;
    double standard_error = 0.0;
};

SampleSummary summarize(std::span<const double> values);

/// Mean of a - b with its standard error and z statistic.
struct PairedComparison {
    double mean_difference = 0.0;
    double standard_error = 0.0;
    double z = 0.0;
};

PairedComparison paired_difference(std::span<const double> a, std::span<const double> b);

/// Caliper-estimate errors (estimate - truth) across replications for one (point, expert, rho).
struct ErrorSample {
    std::size_t point_index = 0;
    std::size_t expert = 0;
    double rho = 0.0;
    std::vector<double> errors;
    SampleSummary summary;
};

std::vector<ErrorSample> estimator_errors(const StudyConfig& cfg, std::span<const ReplicationResult> results);
std::vector<ErrorSample> estimator_error_study(const StudyConfig& cfg);

/// Expected pooled log scores across replications for one (point, scheme, rho).
struct PoolScoreSample {
    std::size_t point_index = 0;
    Scheme scheme = Scheme::Equal;
    /// Absent for schemes that do not use a caliper.
    std::optional<double> rho;
    std::vector<double> values;
    SampleSummary summary;
};

std::vector<PoolScoreSample> pool_scores(const StudyConfig& cfg, std::span<const ReplicationResult> results);
std::vector<PoolScoreSample> pool_comparison_study(const StudyConfig& cfg);

/// Per-replication largest weight of the full-history natural-scaling pool.
std::vector<double> polarization(std::span<const ReplicationResult> results);

}  // namespace lpp
