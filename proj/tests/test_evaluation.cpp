#include "oracles.hpp"

#include <lpp/dgp.hpp>
#include <lpp/errors.hpp>
#include <lpp/evaluation.hpp>
#include <lpp/local_elpd.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lpp;

namespace {

std::vector<Observation> dgp_observations(std::size_t n, std::uint64_t seed) {
    DgpConfig dgp;
    dgp.sample_size = n;
    dgp.seed = seed;
    std::vector<Observation> obs;
    const auto samples = generate_dgp(dgp);
    for (std::size_t t = 0; t < n; ++t) obs.push_back({static_cast<std::int64_t>(t), samples[t].x, samples[t].x, samples[t].y});
    return obs;
}

ScoredStream dgp_stream(std::size_t n, std::uint64_t seed) {
    std::vector<RegressionExpert> experts{RegressionExpert("expert_1", {0}), RegressionExpert("expert_2", {1})};
    return score_experts(dgp_observations(n, seed), experts);
}

/// Stream whose expert columns are replaced by copies of one column.
ScoredStream replicate_expert(const ScoredStream& s, std::size_t copies) {
    ScoredStream out{s.times, s.points, s.outcomes, {}};
    std::vector<std::string> names;
    for (std::size_t k = 0; k < copies; ++k) names.push_back("copy_" + std::to_string(k));
    out.scores = ExpertScoreTable(names);
    for (std::size_t t = 0; t < s.size(); ++t) out.scores.push_row(std::vector<double>(copies, s.scores.score(0, t)));
    return out;
}

EvaluationConfig small_config() {
    EvaluationConfig cfg;
    cfg.warmup_size = 20;
    cfg.history_size = 40;
    cfg.rho_grid = {0.5, 1.0, 2.0};
    cfg.scaling_grid = {FixedScaling{1.0}, FixedScaling{5.0}, NaturalScaling{}};
    return cfg;
}

bool same_step(const StepResult& a, const StepResult& b) {
    if (a.time_index != b.time_index || a.realized_y != b.realized_y || a.expert_log_scores != b.expert_log_scores ||
        a.schemes.size() != b.schemes.size())
        return false;
    for (std::size_t i = 0; i < a.schemes.size(); ++i) {
        const SchemeStep &x = a.schemes[i], &y = b.schemes[i];
        if (x.scheme != y.scheme || x.rho != y.rho || x.scaling != y.scaling || !(x.weights == y.weights) ||
            x.log_score != y.log_score)
            return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("scheme names round trip") {
    for (Scheme s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
    CHECK_THROWS_AS(parse_scheme("bogus"), ParameterError);
}

TEST_CASE("expert scores are causal") {
    const auto obs = dgp_observations(60, 3);
    std::vector<RegressionExpert> experts{RegressionExpert("a", {0}), RegressionExpert("b", {0, 1})};
    const ScoredStream s = score_experts(obs, experts);
    for (std::size_t t : {0u, 1u, 17u, 59u}) {
        RegressionExpert fresh("b", {0, 1});
        for (std::size_t i = 0; i < t; ++i) fresh.observe(obs[i].covariates, obs[i].y);
        CHECK(s.scores.score(1, t) == doctest::Approx(fresh.predict(obs[t].covariates).log_density(obs[t].y)).epsilon(1e-12));
    }
}

TEST_CASE("a single expert is its own pool") {
    const ScoredStream s = replicate_expert(dgp_stream(150, 1), 1);
    const EvaluationRun run = rolling_evaluate(s, small_config());
    REQUIRE(run.steps.size() == 90);
    for (const StepResult& step : run.steps)
        for (const SchemeStep& sc : step.schemes) {
            CHECK(sc.weights == PoolWeights({1.0}));
            CHECK(sc.log_score == step.expert_log_scores[0]);
        }
}

TEST_CASE("identical experts make every scheme identical") {
    const ScoredStream s = replicate_expert(dgp_stream(150, 2), 3);
    const EvaluationRun run = rolling_evaluate(s, small_config());
    for (const StepResult& step : run.steps)
        for (const SchemeStep& sc : step.schemes) CHECK(sc.log_score == step.expert_log_scores[0]);
}

TEST_CASE("pooled scores are the pooled log density of the reported weights") {
    const EvaluationRun run = rolling_evaluate(dgp_stream(200, 3), small_config());
    for (const StepResult& step : run.steps)
        for (const SchemeStep& sc : step.schemes)
            CHECK(std::abs(sc.log_score - pooled_log_density(sc.weights, step.expert_log_scores)) <= 1e-12);
}

TEST_CASE("global natural scaling agrees with a hand-rolled loop") {
    const ScoredStream s = dgp_stream(200, 4);
    EvaluationConfig cfg = small_config();
    cfg.rho_grid = {kGlobalCaliper};
    cfg.scaling_grid = {NaturalScaling{}};
    cfg.schemes = {Scheme::LocalDm};
    const EvaluationRun run = rolling_evaluate(s, cfg);

    double totals[2] = {0.0, 0.0};
    std::size_t n = 0, reported = 0;
    for (std::size_t t = cfg.warmup_size; t < s.size(); ++t) {
        const double d = totals[0] - totals[1];
        const double w0 = n == 0 ? 0.5 : 1.0 / (1.0 + std::exp(-d));
        const auto row = s.scores.row(t);
        if (t >= cfg.warmup_size + cfg.history_size) {
            const double expected = std::log(w0 * std::exp(row[0]) + (1.0 - w0) * std::exp(row[1]));
            CHECK(run.steps[reported].at(Scheme::LocalDm).log_score == doctest::Approx(expected).epsilon(1e-12));
            ++reported;
        }
        totals[0] += row[0];
        totals[1] += row[1];
        ++n;
    }
    CHECK(reported == run.steps.size());
}

TEST_CASE("equal-weights total equals the direct sum") {
    const ScoredStream s = dgp_stream(200, 5);
    EvaluationConfig cfg = small_config();
    cfg.schemes = {Scheme::Equal};
    const EvaluationRun run = rolling_evaluate(s, cfg);
    double direct = 0.0;
    for (std::size_t t = 60; t < s.size(); ++t) direct += pooled_log_density(equal_weights(2), s.scores.row(t));
    CHECK(std::abs(cumulative_scores(run.steps).at(Scheme::Equal).back() - direct) < 1e-9);
}

TEST_CASE("hyperparameter selection") {
    CHECK(select_hyperparameters(std::vector{-3.0}, 5) == 0);
    CHECK(select_hyperparameters(std::vector{-10.0, -12.0}, 5) == 0);
    CHECK(select_hyperparameters(std::vector{-12.0, -10.0}, 5) == 1);
    CHECK(select_hyperparameters(std::vector{-12.0, -10.0, -10.0}, 5) == 1);
    CHECK(select_hyperparameters(std::vector{0.0, 0.0}, 0) == 0);
    CHECK_THROWS_AS(select_hyperparameters(std::vector<double>{}, 0), ParameterError);
}

TEST_CASE("cumulative scores") {
    CHECK(cumulative_scores(std::vector<StepResult>{}).empty());
    std::vector<StepResult> steps;
    for (double v : {1.0, 2.0, 3.0}) steps.push_back({0, 0.0, {SchemeStep{Scheme::Equal, {}, {}, equal_weights(1), v}}, {v}});
    CHECK(cumulative_scores(steps).at(Scheme::Equal) == std::vector{1.0, 3.0, 6.0});
}

TEST_CASE("every step can be replayed from its truncated history") {
    const ScoredStream s = dgp_stream(140, 6);
    const EvaluationConfig cfg = small_config();
    const EvaluationRun full = rolling_evaluate(s, cfg);
    for (std::size_t t = cfg.warmup_size + cfg.history_size; t < s.size(); t += 7) {
        const EvaluationRun part = rolling_evaluate(s.prefix(t + 1), cfg);
        CHECK(same_step(part.steps.back(), full.steps[t - cfg.warmup_size - cfg.history_size]));
    }
}

TEST_CASE("selected candidate maximizes the earlier cumulative candidate scores") {
    const ScoredStream s = dgp_stream(130, 7);
    const EvaluationConfig cfg = small_config();
    const EvaluationRun full = rolling_evaluate(s, cfg);
    const std::size_t first = cfg.warmup_size + cfg.history_size;
    for (std::size_t t = first + 1; t < s.size(); t += 5) {
        // Candidate totals over rows before t.
        const EvaluationRun before = rolling_evaluate(s.prefix(t), cfg);
        for (Scheme scheme : {Scheme::LocalDm, Scheme::LocalOpt}) {
            std::size_t best = 0;
            double best_total = -INFINITY;
            std::size_t index = 0;
            for (const CandidateTotal& c : before.candidates) {
                if (c.scheme != scheme) continue;
                const double total = c.history_total + c.evaluation_total;
                if (total > best_total) best_total = total, best = index;
                ++index;
            }
            index = 0;
            for (const CandidateTotal& c : before.candidates) {
                if (c.scheme != scheme) continue;
                if (index++ != best) continue;
                const SchemeStep& chosen = full.steps[t - first].at(scheme);
                CHECK(chosen.rho == c.rho);
                if (scheme == Scheme::LocalDm) CHECK(chosen.scaling == c.scaling);
            }
        }
    }
}

TEST_CASE("invalid configurations are rejected") {
    const ScoredStream s = dgp_stream(100, 8);
    EvaluationConfig cfg = small_config();
    cfg.history_size = 80;
    CHECK_THROWS_AS(rolling_evaluate(s, cfg), ProtocolError);
    cfg = small_config();
    cfg.rho_grid.clear();
    CHECK_THROWS_AS(rolling_evaluate(s, cfg), ParameterError);
    cfg = small_config();
    cfg.rho_grid = {-1.0};
    CHECK_THROWS_AS(rolling_evaluate(s, cfg), ParameterError);
    cfg = small_config();
    cfg.schemes.clear();
    CHECK_THROWS_AS(rolling_evaluate(s, cfg), ParameterError);
}

TEST_CASE("the observation overload scores experts before evaluating") {
    const auto obs = dgp_observations(150, 9);
    std::vector<RegressionExpert> experts{RegressionExpert("expert_1", {0}), RegressionExpert("expert_2", {1})};
    const EvaluationRun a = rolling_evaluate(obs, experts, small_config());
    const EvaluationRun b = rolling_evaluate(dgp_stream(150, 9), small_config());
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(same_step(a.steps[i], b.steps[i]));
    CHECK(a.expert_names == std::vector<std::string>{"expert_1", "expert_2"});
}

}  // TEST_SUITE
