#include <lpp/simulation.hpp>

#include <lpp/errors.hpp>
#include <lpp/local_elpd.hpp>

#include <cmath>
#include <string>

namespace lpp {

std::vector<double> default_error_rho_grid() { return {0.5, 0.75, 1.0, 1.5}; }

std::vector<double> default_pool_rho_grid() { return {0.25, 0.5, 1.0, 2.0, 3.0, 50.0}; }

void validate(const StudyConfig& cfg) {
    validate(cfg.dgp);
    if (cfg.training_size == 0 || cfg.training_size >= cfg.dgp.sample_size)
        throw ParameterError("study: training size must be in [1, sample size)");
    if (cfg.replications == 0) throw ParameterError("study: need at least one replication");
    if (cfg.error_rho_grid.empty() || cfg.pool_rho_grid.empty())
        throw ParameterError("study: empty caliper-width grid");
    for (const auto* grid : {&cfg.error_rho_grid, &cfg.pool_rho_grid})
        for (double rho : *grid)
            if (!(rho > 0.0)) throw ParameterError("study: caliper widths must be > 0");
    for (const PoolingPoint& z : cfg.eval_points)
        if (z.size() != cfg.dgp.coefficients.size())
            throw DimensionError("study: evaluation point dimension differs from the number of covariates");
}

Rng replication_rng(std::uint64_t seed, std::size_t replication) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32)};
    return Rng(seq);
}

ReplicationFit fit_replication(const StudyConfig& cfg, std::size_t replication) {
    validate(cfg);
    Rng rng = replication_rng(cfg.dgp.seed, replication);
    const std::vector<DgpSample> data = generate_dgp(cfg.dgp, rng);
    const std::size_t d = cfg.dgp.coefficients.size();

    std::vector<RegressionExpert> experts;
    for (std::size_t j = 0; j < d; ++j) experts.emplace_back("expert_" + std::to_string(j + 1), std::vector{j}, cfg.prior);

    // Training block: batch conjugate update, identical to the sequential one.
    for (RegressionExpert& e : experts) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(cfg.training_size), e.posterior().dimension());
        Eigen::VectorXd y(static_cast<Eigen::Index>(cfg.training_size));
        for (std::size_t i = 0; i < cfg.training_size; ++i) {
            X.row(static_cast<Eigen::Index>(i)) = design_vector(e.posterior(), data[i].x).transpose();
            y[static_cast<Eigen::Index>(i)] = data[i].y;
        }
        e = RegressionExpert(e.name(), nig_update_batch(e.posterior(), X, y));
    }

    ReplicationFit fit{std::move(experts), History(d, d, cfg.metric)};
    std::vector<double> scores(d);
    for (std::size_t i = cfg.training_size; i < data.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) scores[k] = fit.experts[k].predict(data[i].x).log_density(data[i].y);
        fit.history.append(PredictionRecord{static_cast<std::int64_t>(i), data[i].x, data[i].y, scores});
    }
    return fit;
}

ReplicationResult run_replication(const StudyConfig& cfg, std::size_t replication) {
    const ReplicationFit fit = fit_replication(cfg, replication);
    const std::size_t k = fit.experts.size();
    const std::size_t n_points = cfg.eval_points.size();
    const std::size_t n_err = cfg.error_rho_grid.size();
    const std::size_t n_pool = cfg.pool_rho_grid.size();

    ReplicationResult out;
    out.replication = replication;
    out.true_elpd.assign(n_points, std::vector<double>(k));
    out.caliper_estimate.assign(n_points, std::vector<std::vector<double>>(n_err));
    out.neighbor_count.assign(n_points, std::vector<std::size_t>(n_err));
    out.local_dm_score.assign(n_points, std::vector<double>(n_pool));
    out.local_opt_score.assign(n_points, std::vector<double>(n_pool));
    out.equal_score.resize(n_points);
    out.global_opt_score.resize(n_points);

    const PoolWeights global_weights = optimize_pool_weights(history_scores(fit.history), cfg.optimizer).weights;

    for (std::size_t p = 0; p < n_points; ++p) {
        const PoolingPoint& z = cfg.eval_points[p];
        std::vector<PredictiveDensity> predictive;
        for (std::size_t e = 0; e < k; ++e) {
            predictive.push_back(fit.experts[e].predict(z));
            out.true_elpd[p][e] = true_local_elpd(predictive.back(), z, cfg.dgp, cfg.quadrature_nodes);
        }
        auto pooled_score = [&](const PoolWeights& w) {
            return true_local_elpd(assemble_pool(w, predictive), z, cfg.dgp, cfg.quadrature_nodes);
        };
        out.equal_score[p] = pooled_score(equal_weights(k));
        out.global_opt_score[p] = pooled_score(global_weights);

        const std::vector<double> dist = fit.history.distances(z);
        for (std::size_t r = 0; r < n_err; ++r) {
            const LocalElpdEstimate est = caliper_elpd(fit.history, within_caliper(dist, cfg.error_rho_grid[r]),
                                                       cfg.error_rho_grid[r]);
            out.caliper_estimate[p][r] = est.estimate;
            out.neighbor_count[p][r] = est.neighbor_count;
        }
        for (std::size_t r = 0; r < n_pool; ++r) {
            const std::vector<std::size_t> nb = within_caliper(dist, cfg.pool_rho_grid[r]);
            const LocalElpdEstimate est = caliper_elpd(fit.history, nb, cfg.pool_rho_grid[r]);
            out.local_dm_score[p][r] = pooled_score(softmax_weights(est, NaturalScaling{}));
            out.local_opt_score[p][r] = pooled_score(local_opt_weights(fit.history, nb, cfg.optimizer));
        }
    }

    const PoolingPoint origin(cfg.dgp.coefficients.size(), 0.0);
    const LocalElpdEstimate everything = caliper_elpd(fit.history, origin, kGlobalCaliper);
    out.global_natural_max_weight = softmax_weights(everything, NaturalScaling{}).max();
    return out;
}

std::vector<ReplicationResult> run_study(const StudyConfig& cfg) {
    validate(cfg);
    std::vector<ReplicationResult> out;
    out.reserve(cfg.replications);
    for (std::size_t r = 0; r < cfg.replications; ++r) out.push_back(run_replication(cfg, r));
    return out;
}

SampleSummary summarize(std::span<const double> values) {
    SampleSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.standard_error = s.stddev / std::sqrt(static_cast<double>(values.size()));
    return s;
}

PairedComparison paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("paired_difference: samples of different size");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const SampleSummary s = summarize(diff);
    PairedComparison out{s.mean, s.standard_error, 0.0};
    if (s.standard_error > 0.0) {
        out.z = s.mean / s.standard_error;
    } else if (s.mean != 0.0) {
        out.z = std::copysign(std::numeric_limits<double>::infinity(), s.mean);
    }
    return out;
}

std::vector<ErrorSample> estimator_errors(const StudyConfig& cfg, std::span<const ReplicationResult> results) {
    std::vector<ErrorSample> out;
    if (results.empty()) return out;
    const std::size_t k = results.front().true_elpd.front().size();
    for (std::size_t p = 0; p < cfg.eval_points.size(); ++p) {
        for (std::size_t e = 0; e < k; ++e) {
            for (std::size_t r = 0; r < cfg.error_rho_grid.size(); ++r) {
                ErrorSample sample{p, e, cfg.error_rho_grid[r], {}, {}};
                for (const ReplicationResult& rep : results)
                    sample.errors.push_back(rep.caliper_estimate[p][r][e] - rep.true_elpd[p][e]);
                sample.summary = summarize(sample.errors);
                out.push_back(std::move(sample));
            }
        }
    }
    return out;
}

std::vector<ErrorSample> estimator_error_study(const StudyConfig& cfg) {
    const std::vector<ReplicationResult> results = run_study(cfg);
    return estimator_errors(cfg, results);
}

std::vector<PoolScoreSample> pool_scores(const StudyConfig& cfg, std::span<const ReplicationResult> results) {
    std::vector<PoolScoreSample> out;
    auto push = [&](std::size_t p, Scheme scheme, std::optional<double> rho, auto&& value_of) {
        PoolScoreSample sample{p, scheme, rho, {}, {}};
        for (const ReplicationResult& rep : results) sample.values.push_back(value_of(rep));
        sample.summary = summarize(sample.values);
        out.push_back(std::move(sample));
    };
    for (std::size_t p = 0; p < cfg.eval_points.size(); ++p) {
        push(p, Scheme::Equal, std::nullopt, [p](const ReplicationResult& r) { return r.equal_score[p]; });
        push(p, Scheme::GlobalOpt, std::nullopt, [p](const ReplicationResult& r) { return r.global_opt_score[p]; });
        for (std::size_t i = 0; i < cfg.pool_rho_grid.size(); ++i) {
            push(p, Scheme::LocalDm, cfg.pool_rho_grid[i], [p, i](const ReplicationResult& r) { return r.local_dm_score[p][i]; });
            push(p, Scheme::LocalOpt, cfg.pool_rho_grid[i], [p, i](const ReplicationResult& r) { return r.local_opt_score[p][i]; });
        }
    }
    return out;
}

std::vector<PoolScoreSample> pool_comparison_study(const StudyConfig& cfg) {
    const std::vector<ReplicationResult> results = run_study(cfg);
    return pool_scores(cfg, results);
}

std::vector<double> polarization(std::span<const ReplicationResult> results) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const ReplicationResult& r : results) out.push_back(r.global_natural_max_weight);
    return out;
}

}  // namespace lpp
