#include <lpp/evaluation.hpp>

#include <lpp/errors.hpp>
#include <lpp/local_elpd.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace lpp {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::LocalDm: return "local_dm";
        case Scheme::Equal: return "equal";
        case Scheme::GlobalOpt: return "global_opt";
        case Scheme::LocalOpt: return "local_opt";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view text) {
    for (Scheme s : kAllSchemes)
        if (to_string(s) == text) return s;
    throw ParameterError("unknown pooling scheme '" + std::string(text) +
                         "' (expected local_dm, equal, global_opt or local_opt)");
}

std::vector<double> default_rho_grid() { return {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, kGlobalCaliper}; }

std::vector<ScalingRule> default_scaling_grid() {
    return {FixedScaling{0.5}, FixedScaling{1.0}, FixedScaling{2.0}, FixedScaling{5.0}, FixedScaling{10.0},
            NaturalScaling{}};
}

namespace {

bool runs(const EvaluationConfig& cfg, Scheme s) {
    return std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end();
}

}  // namespace

void validate(const EvaluationConfig& cfg, std::size_t stream_length) {
    if (cfg.schemes.empty()) throw ParameterError("evaluation: no pooling schemes selected");
    const bool local = runs(cfg, Scheme::LocalDm) || runs(cfg, Scheme::LocalOpt);
    if (local && cfg.rho_grid.empty()) throw ParameterError("evaluation: empty caliper-width grid");
    for (double rho : cfg.rho_grid)
        if (!(rho > 0.0) || std::isnan(rho)) throw ParameterError("evaluation: caliper widths must be > 0");
    if (runs(cfg, Scheme::LocalDm) && cfg.scaling_grid.empty())
        throw ParameterError("evaluation: empty scaling grid");
    for (const ScalingRule& r : cfg.scaling_grid)
        if (const auto* f = std::get_if<FixedScaling>(&r); f && (!std::isfinite(f->tau) || f->tau < 0.0))
            throw ParameterError("evaluation: tau must be finite and >= 0");
    if (cfg.warmup_size + cfg.history_size >= stream_length)
        throw ProtocolError("evaluation: stream of length " + std::to_string(stream_length) +
                            " leaves no evaluation steps after warmup " + std::to_string(cfg.warmup_size) +
                            " and history " + std::to_string(cfg.history_size));
}

ScoredStream ScoredStream::prefix(std::size_t rows) const {
    rows = std::min(rows, size());
    ScoredStream out;
    out.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(rows));
    out.points.assign(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(rows));
    out.outcomes.assign(outcomes.begin(), outcomes.begin() + static_cast<std::ptrdiff_t>(rows));
    out.scores = ExpertScoreTable(scores.names());
    for (std::size_t t = 0; t < rows; ++t) out.scores.push_row(scores.row(t));
    return out;
}

void validate(const ScoredStream& stream) {
    const std::size_t n = stream.size();
    if (stream.points.size() != n || stream.outcomes.size() != n || stream.scores.steps() != n)
        throw DimensionError("scored stream: times, points, outcomes and scores have different lengths");
    if (stream.scores.experts() == 0) throw DimensionError("scored stream: no experts");
    const std::size_t d = stream.dimension();
    for (std::size_t t = 0; t < n; ++t) {
        if (stream.points[t].size() != d || d == 0)
            throw DimensionError("scored stream: ragged pooling points at row " + std::to_string(t));
        for (double c : stream.points[t])
            if (!std::isfinite(c)) throw ParameterError("scored stream: non-finite pooling coordinate");
        if (!std::isfinite(stream.outcomes[t])) throw ParameterError("scored stream: non-finite outcome");
        if (t > 0 && stream.times[t] <= stream.times[t - 1])
            throw ProtocolError("scored stream: time index not strictly increasing at row " + std::to_string(t));
    }
}

ScoredStream score_experts(std::span<const Observation> observations, std::vector<RegressionExpert>& experts) {
    if (experts.empty()) throw DimensionError("score_experts: no experts");
    std::vector<std::string> names;
    for (const RegressionExpert& e : experts) names.push_back(e.name());
    ScoredStream out;
    out.scores = ExpertScoreTable(std::move(names));
    std::vector<double> row(experts.size());
    for (const Observation& obs : observations) {
        for (std::size_t k = 0; k < experts.size(); ++k)
            row[k] = experts[k].predict(obs.covariates).log_density(obs.y);
        out.times.push_back(obs.time_index);
        out.points.push_back(obs.point);
        out.outcomes.push_back(obs.y);
        out.scores.push_row(row);
        for (RegressionExpert& e : experts) e.observe(obs.covariates, obs.y);
    }
    return out;
}

const SchemeStep& StepResult::at(Scheme scheme) const {
    for (const SchemeStep& s : schemes)
        if (s.scheme == scheme) return s;
    throw IndexError("step result: scheme " + std::string(to_string(scheme)) + " was not evaluated");
}

std::size_t select_hyperparameters(std::span<const double> cumulative, std::size_t scored_steps) {
    if (cumulative.empty()) throw ParameterError("select_hyperparameters: empty candidate grid");
    if (scored_steps == 0) return 0;
    std::size_t best = 0;
    for (std::size_t c = 1; c < cumulative.size(); ++c)
        if (cumulative[c] > cumulative[best]) best = c;
    return best;
}

namespace {

struct CandidateState {
    CandidateTotal summary;
    double cumulative = 0.0;
};

/// Picks the candidate to report at this step from scores accumulated before it, then
/// folds this step's candidate scores into the running totals.
struct CandidateSet {
    std::vector<CandidateState> states;
    std::vector<double> cumulative;

    void add(Scheme scheme, double rho, std::optional<ScalingRule> scaling) {
        states.push_back({CandidateTotal{scheme, rho, std::move(scaling), 0.0, 0.0, 0}, 0.0});
        cumulative.push_back(0.0);
    }

    std::size_t select(std::size_t scored_steps) const { return select_hyperparameters(cumulative, scored_steps); }

    void record(std::span<const double> step_scores, bool reported, std::optional<std::size_t> selected) {
        for (std::size_t c = 0; c < states.size(); ++c) {
            cumulative[c] += step_scores[c];
            (reported ? states[c].summary.evaluation_total : states[c].summary.history_total) += step_scores[c];
        }
        if (reported && selected) ++states[*selected].summary.times_selected;
    }
};

}  // namespace

EvaluationRun rolling_evaluate(const ScoredStream& stream, const EvaluationConfig& cfg) {
    validate(stream);
    validate(cfg, stream.size());

    const std::size_t k = stream.scores.experts();
    const bool do_dm = runs(cfg, Scheme::LocalDm);
    const bool do_lopt = runs(cfg, Scheme::LocalOpt);
    const bool do_equal = runs(cfg, Scheme::Equal);
    const bool do_gopt = runs(cfg, Scheme::GlobalOpt);

    CandidateSet dm;
    CandidateSet lopt;
    // Candidate order is the tie-break order: rho major, scaling minor.
    if (do_dm)
        for (double rho : cfg.rho_grid)
            for (const ScalingRule& rule : cfg.scaling_grid) dm.add(Scheme::LocalDm, rho, rule);
    if (do_lopt)
        for (double rho : cfg.rho_grid) lopt.add(Scheme::LocalOpt, rho, std::nullopt);

    History history(stream.dimension(), k, cfg.metric);
    EvaluationRun run;
    run.expert_names = stream.scores.names();
    const std::size_t first_reported = cfg.warmup_size + cfg.history_size;
    std::size_t scored_steps = 0;

    std::vector<double> dm_scores(dm.states.size());
    std::vector<PoolWeights> dm_weights;
    std::vector<double> lopt_scores(lopt.states.size());
    std::vector<PoolWeights> lopt_weights;

    for (std::size_t t = cfg.warmup_size; t < stream.size(); ++t) {
        const PoolingPoint& z = stream.points[t];
        const std::span<const double> expert_scores = stream.scores.row(t);
        const bool reported = t >= first_reported;

        StepResult step;
        step.time_index = stream.times[t];
        step.realized_y = stream.outcomes[t];
        step.expert_log_scores.assign(expert_scores.begin(), expert_scores.end());

        std::vector<double> dist;
        if (do_dm || do_lopt) dist = history.distances(z);

        std::optional<std::size_t> dm_pick;
        if (do_dm) {
            dm_weights.clear();
            std::size_t c = 0;
            for (double rho : cfg.rho_grid) {
                const std::vector<std::size_t> nb = within_caliper(dist, rho);
                const LocalElpdEstimate est = caliper_elpd(history, nb, rho);
                for (const ScalingRule& rule : cfg.scaling_grid) {
                    dm_weights.push_back(softmax_weights(est, rule));
                    dm_scores[c] = pooled_log_density(dm_weights.back(), expert_scores);
                    ++c;
                }
            }
            dm_pick = dm.select(scored_steps);
            const CandidateTotal& chosen = dm.states[*dm_pick].summary;
            step.schemes.push_back({Scheme::LocalDm, chosen.rho, chosen.scaling, dm_weights[*dm_pick], dm_scores[*dm_pick]});
        }
        if (do_equal) {
            PoolWeights w = equal_weights(k);
            const double s = pooled_log_density(w, expert_scores);
            step.schemes.push_back({Scheme::Equal, std::nullopt, std::nullopt, std::move(w), s});
        }
        if (do_gopt) {
            PoolWeights w = history.empty() ? equal_weights(k)
                                            : optimize_pool_weights(history_scores(history), cfg.optimizer).weights;
            const double s = pooled_log_density(w, expert_scores);
            step.schemes.push_back({Scheme::GlobalOpt, std::nullopt, std::nullopt, std::move(w), s});
        }
        std::optional<std::size_t> lopt_pick;
        if (do_lopt) {
            lopt_weights.clear();
            for (std::size_t c = 0; c < cfg.rho_grid.size(); ++c) {
                const std::vector<std::size_t> nb = within_caliper(dist, cfg.rho_grid[c]);
                lopt_weights.push_back(local_opt_weights(history, nb, cfg.optimizer));
                lopt_scores[c] = pooled_log_density(lopt_weights.back(), expert_scores);
            }
            lopt_pick = lopt.select(scored_steps);
            step.schemes.push_back({Scheme::LocalOpt, lopt.states[*lopt_pick].summary.rho, std::nullopt,
                                    lopt_weights[*lopt_pick], lopt_scores[*lopt_pick]});
        }

        if (do_dm) dm.record(dm_scores, reported, dm_pick);
        if (do_lopt) lopt.record(lopt_scores, reported, lopt_pick);
        ++scored_steps;
        if (reported) run.steps.push_back(std::move(step));

        history.append(PredictionRecord{stream.times[t], z, stream.outcomes[t],
                                        std::vector<double>(expert_scores.begin(), expert_scores.end())});
    }

    for (const CandidateState& s : dm.states) run.candidates.push_back(s.summary);
    for (const CandidateState& s : lopt.states) run.candidates.push_back(s.summary);
    return run;
}

EvaluationRun rolling_evaluate(std::span<const Observation> observations, std::vector<RegressionExpert> experts,
                               const EvaluationConfig& cfg) {
    return rolling_evaluate(score_experts(observations, experts), cfg);
}

std::map<Scheme, std::vector<double>> cumulative_scores(std::span<const StepResult> steps) {
    std::map<Scheme, std::vector<double>> out;
    for (const StepResult& step : steps) {
        for (const SchemeStep& s : step.schemes) {
            auto& series = out[s.scheme];
            series.push_back((series.empty() ? 0.0 : series.back()) + s.log_score);
        }
    }
    return out;
}

}  // namespace lpp
