// Command-line front end for local prediction pools.
//
// Options may also come from an INI file given with --config; a section per subcommand
// ([evaluate], [simulate], ...) holds that subcommand's long option names. Command-line
// flags take precedence over file values, which take precedence over built-in defaults.

#include <lpp/errors.hpp>
#include <lpp/evaluation.hpp>
#include <lpp/io.hpp>
#include <lpp/local_elpd.hpp>
#include <lpp/pools.hpp>
#include <lpp/simulation.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct InputOptions {
    std::string scores_path;
    std::string data_path;
    bool use_dgp = false;
    std::vector<std::string> expert_specs;
    std::vector<double> coefficients{1.0, 1.0};
    double noise_sd = 1.0;
    std::size_t sample_size = 1000;
    std::optional<std::uint64_t> seed;
};

struct PoolOptions {
    std::size_t warmup = 0;
    std::size_t history = 0;
    std::vector<double> rho = lpp::default_rho_grid();
    std::vector<std::string> scaling;
    std::vector<std::string> schemes;
    std::string metric = "standardized";
};

lpp::Metric parse_metric(const std::string& text) {
    if (text == "standardized") return lpp::Metric::Standardized;
    if (text == "raw") return lpp::Metric::Raw;
    throw lpp::ParameterError("metric must be 'standardized' or 'raw', got '" + text + "'");
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    auto* group = cmd->add_option_group("input", "exactly one data source");
    group->add_option("--scores", in.scores_path, "score CSV: t,y,z_1..z_d,lp_<expert>...");
    group->add_option("--data", in.data_path, "observation CSV for built-in experts: t,y,z_1..z_d,x_1..x_p");
    group->add_flag("--dgp", in.use_dgp, "simulate the two-covariate linear example with built-in experts");
    group->require_option(1);
    cmd->add_option("--expert", in.expert_specs,
                    "built-in expert NAME=i,j,... reading covariates x_i, x_j (1-based); default one per covariate");
    cmd->add_option("--coefficients", in.coefficients, "dgp coefficients")->delimiter(',');
    cmd->add_option("--noise-sd", in.noise_sd, "dgp noise standard deviation");
    cmd->add_option("--sample-size", in.sample_size, "dgp sample size");
    cmd->add_option("--seed", in.seed, "random seed (required with --dgp)");
}

void add_pool_options(CLI::App* cmd, PoolOptions& p) {
    cmd->add_option("--warmup", p.warmup, "rows used only to train the experts");
    cmd->add_option("--history", p.history, "rows recorded to seed the local estimates, not reported");
    cmd->add_option("--rho", p.rho, "caliper-width grid")->delimiter(',');
    cmd->add_option("--scaling", p.scaling, "softmax scaling grid: tau values and/or 'natural'")->delimiter(',');
    cmd->add_option("--schemes", p.schemes, "subset of local_dm,equal,global_opt,local_opt")->delimiter(',');
    cmd->add_option("--metric", p.metric, "pooling-space metric: standardized or raw");
}

lpp::EvaluationConfig make_config(const PoolOptions& p, std::uint64_t seed) {
    lpp::EvaluationConfig cfg;
    cfg.warmup_size = p.warmup;
    cfg.history_size = p.history;
    cfg.rho_grid = p.rho;
    if (!p.scaling.empty()) {
        cfg.scaling_grid.clear();
        for (const std::string& s : p.scaling) cfg.scaling_grid.push_back(lpp::parse_scaling(s));
    }
    if (!p.schemes.empty()) {
        cfg.schemes.clear();
        for (const std::string& s : p.schemes) cfg.schemes.push_back(lpp::parse_scheme(s));
    }
    cfg.metric = parse_metric(p.metric);
    cfg.seed = seed;
    return cfg;
}

std::vector<lpp::RegressionExpert> make_experts(const std::vector<std::string>& specs, std::size_t covariates) {
    std::vector<lpp::RegressionExpert> experts;
    if (specs.empty()) {
        for (std::size_t j = 0; j < covariates; ++j)
            experts.emplace_back("expert_" + std::to_string(j + 1), std::vector<std::size_t>{j});
        return experts;
    }
    for (const std::string& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw lpp::ParameterError("expert spec must be NAME=i,j,...: " + spec);
        std::vector<std::size_t> indices;
        std::string rest = spec.substr(eq + 1);
        std::size_t start = 0;
        while (start < rest.size()) {
            const std::size_t comma = std::min(rest.find(',', start), rest.size());
            std::size_t index = 0;
            const auto res = std::from_chars(rest.data() + start, rest.data() + comma, index);
            if (res.ec != std::errc{} || res.ptr != rest.data() + comma)
                throw lpp::ParameterError("expert spec must be NAME=i,j,...: " + spec);
            if (index == 0 || index > covariates)
                throw lpp::ParameterError("expert '" + spec + "' refers to a covariate that does not exist");
            indices.push_back(index - 1);
            start = comma + 1;
        }
        experts.emplace_back(spec.substr(0, eq), std::move(indices));
    }
    return experts;
}

/// Resolves the data source into a scored stream plus a description for the manifest.
lpp::ScoredStream load_input(const InputOptions& in, json& description) {
    if (!in.scores_path.empty()) {
        description = {{"scores", in.scores_path}};
        return lpp::load_score_csv(in.scores_path);
    }
    std::vector<lpp::Observation> observations;
    if (!in.data_path.empty()) {
        description = {{"data", in.data_path}};
        observations = lpp::load_observation_csv(in.data_path);
    } else {
        if (!in.seed) throw lpp::ParameterError("--seed is required with --dgp");
        lpp::DgpConfig dgp;
        dgp.coefficients = in.coefficients;
        dgp.noise_sd = in.noise_sd;
        dgp.sample_size = in.sample_size;
        dgp.seed = *in.seed;
        description = {{"dgp",
                        {{"coefficients", dgp.coefficients},
                         {"noise_sd", dgp.noise_sd},
                         {"sample_size", dgp.sample_size},
                         {"seed", dgp.seed}}}};
        const auto samples = lpp::generate_dgp(dgp);
        for (std::size_t t = 0; t < samples.size(); ++t)
            observations.push_back({static_cast<std::int64_t>(t), samples[t].x, samples[t].x, samples[t].y});
    }
    std::vector<lpp::RegressionExpert> experts = make_experts(in.expert_specs, observations.front().covariates.size());
    json specs = json::array();
    for (const auto& e : experts) specs.push_back({{"name", e.name()}, {"covariates", e.posterior().covariate_indices}});
    description["experts"] = specs;
    return lpp::score_experts(observations, experts);
}

int run_evaluate(const InputOptions& in, const PoolOptions& p, const std::string& out_dir) {
    json inputs;
    const lpp::ScoredStream stream = load_input(in, inputs);
    const lpp::EvaluationConfig cfg = make_config(p, in.seed.value_or(0));
    const lpp::EvaluationRun run = lpp::rolling_evaluate(stream, cfg);
    lpp::emit_results(run, {"evaluate", cfg.seed, lpp::to_json(cfg), inputs}, out_dir);
    const json summary = lpp::summary_json(run);
    std::cout << "evaluated " << run.steps.size() << " steps; total log score per scheme:\n";
    for (const auto& [scheme, total] : summary["totals"].items())
        std::cout << "  " << scheme << ": " << lpp::format_real(total.get<double>()) << '\n';
    std::cout << "results written to " << out_dir << '\n';
    return 0;
}

int run_gridsearch(const InputOptions& in, PoolOptions p, const std::string& out_dir) {
    json inputs;
    const lpp::ScoredStream stream = load_input(in, inputs);
    if (p.schemes.empty()) p.schemes = {"local_dm", "local_opt"};
    const lpp::EvaluationConfig cfg = make_config(p, in.seed.value_or(0));
    const lpp::EvaluationRun run = lpp::rolling_evaluate(stream, cfg);
    lpp::emit_results(run, {"gridsearch", cfg.seed, lpp::to_json(cfg), inputs}, out_dir);

    std::vector<lpp::CandidateTotal> ranked = run.candidates;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.evaluation_total > b.evaluation_total; });
    std::cout << "scheme,rho,scaling,evaluation_total\n";
    for (const auto& c : ranked)
        std::cout << lpp::to_string(c.scheme) << ',' << lpp::format_real(c.rho) << ','
                  << (c.scaling ? lpp::to_string(*c.scaling) : "") << ',' << lpp::format_real(c.evaluation_total) << '\n';
    return 0;
}

int run_simulate(lpp::StudyConfig cfg, const std::string& out_dir) {
    const std::vector<lpp::ReplicationResult> results = lpp::run_study(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "'");
    {
        std::ofstream out(fs::path(out_dir) / "study.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write study.csv in '" + out_dir + "'");
        lpp::write_study_csv(out, cfg, results);
    }
    const json summary = lpp::study_summary_json(cfg, results);
    std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
    std::ofstream(fs::path(out_dir) / "manifest.json")
        << lpp::to_json(lpp::RunManifest{"simulate", cfg.dgp.seed, lpp::to_json(cfg), json::object()}).dump(2) << '\n';
    std::cout << "simulated " << results.size() << " replications; polarization rate "
              << summary["polarization"]["rate"].get<double>() << "\nresults written to " << out_dir << '\n';
    return 0;
}

struct PoolOnceOptions {
    std::string history_path;
    std::vector<double> z;
    double rho = 1.0;
    std::string scaling = "natural";
    std::string densities_path;
    std::string metric = "standardized";
    std::string out_path;
};

int run_pool_once(const PoolOnceOptions& o) {
    const lpp::ScoredStream stream = lpp::load_score_csv(o.history_path);
    const std::size_t k = stream.scores.experts();
    lpp::History history(stream.dimension(), k, parse_metric(o.metric));
    for (std::size_t t = 0; t < stream.size(); ++t) {
        const auto row = stream.scores.row(t);
        history.append({stream.times[t], stream.points[t], stream.outcomes[t], {row.begin(), row.end()}});
    }
    const std::vector<std::size_t> nb = history.caliper_neighbors(o.z, o.rho);
    const lpp::LocalElpdEstimate est = lpp::caliper_elpd(history, nb, o.rho);
    const lpp::ScalingRule rule = lpp::parse_scaling(o.scaling);

    std::vector<std::pair<std::string, lpp::PoolWeights>> weights{
        {"local_dm", lpp::softmax_weights(est, rule)},
        {"equal", lpp::equal_weights(k)},
        {"global_opt", lpp::optimize_pool_weights(lpp::history_scores(history)).weights},
        {"local_opt", lpp::local_opt_weights(history, nb)},
    };

    std::optional<std::vector<lpp::PredictiveDensity>> densities;
    if (!o.densities_path.empty()) {
        std::ifstream in(o.densities_path);
        if (!in) throw std::runtime_error("cannot open '" + o.densities_path + "'");
        const json j = json::parse(in);
        densities.emplace();
        for (const json& d : j) densities->push_back(lpp::density_from_json(d));
        if (densities->size() != k)
            throw lpp::DimensionError("densities file lists " + std::to_string(densities->size()) +
                                      " experts, history has " + std::to_string(k));
    }

    json schemes = json::object();
    for (const auto& [name, w] : weights) {
        json entry = {{"weights", std::vector<double>(w.begin(), w.end())}};
        if (densities) entry["pooled_density"] = lpp::density_to_json(lpp::assemble_pool(w, *densities));
        schemes[name] = std::move(entry);
    }
    const json out = {{"experts", stream.scores.names()},
                      {"z", o.z},
                      {"rho", o.rho},
                      {"scaling", lpp::to_string(rule)},
                      {"neighbor_count", est.neighbor_count},
                      {"local_elpd", est.estimate},
                      {"schemes", schemes}};
    if (o.out_path.empty() || o.out_path == "-") {
        std::cout << out.dump(2) << '\n';
    } else {
        std::ofstream f(o.out_path);
        if (!f) throw std::runtime_error("cannot write '" + o.out_path + "'");
        f << out.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local prediction pools: caliper-based local weighting of expert predictive distributions"};
    app.set_config("--config", "", "INI configuration file; command-line flags override its values");
    app.set_version_flag("--version", std::string(lpp::kVersion));
    app.require_subcommand(1);

    InputOptions eval_in;
    PoolOptions eval_pool;
    std::string eval_out = "lpp_out";
    auto* evaluate = app.add_subcommand("evaluate", "rolling one-step-ahead evaluation of all pooling schemes");
    add_input_options(evaluate, eval_in);
    add_pool_options(evaluate, eval_pool);
    evaluate->add_option("--out", eval_out, "output directory");

    InputOptions grid_in;
    PoolOptions grid_pool;
    std::string grid_out = "lpp_gridsearch";
    auto* gridsearch = app.add_subcommand("gridsearch", "report the total score of every (rho, scaling) candidate");
    add_input_options(gridsearch, grid_in);
    add_pool_options(gridsearch, grid_pool);
    gridsearch->add_option("--out", grid_out, "output directory");

    lpp::StudyConfig study;
    std::string sim_out = "lpp_simulation";
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the two-expert linear example");
    simulate->add_option("--seed", study.dgp.seed, "random seed")->required();
    simulate->add_option("--replications", study.replications, "number of replications");
    simulate->add_option("--sample-size", study.dgp.sample_size, "observations per replication");
    simulate->add_option("--training-size", study.training_size, "observations used to train the experts");
    simulate->add_option("--error-rho", study.error_rho_grid, "caliper widths for the estimator-error study")
        ->delimiter(',');
    simulate->add_option("--pool-rho", study.pool_rho_grid, "caliper widths for the pool comparison")->delimiter(',');
    simulate->add_option("--nodes", study.quadrature_nodes, "Gauss-Hermite nodes for the true-ELPD oracle");
    simulate->add_option("--out", sim_out, "output directory");

    PoolOnceOptions once;
    auto* pool_once = app.add_subcommand("pool-once", "pool weights and pooled density at one query point");
    pool_once->add_option("--history", once.history_path, "score CSV with the scored history")->required();
    pool_once->add_option("--z", once.z, "query point, comma separated")->delimiter(',')->required();
    pool_once->add_option("--rho", once.rho, "caliper width");
    pool_once->add_option("--scaling", once.scaling, "tau value or 'natural'");
    pool_once->add_option("--densities", once.densities_path, "JSON array of expert predictive densities at z");
    pool_once->add_option("--metric", once.metric, "pooling-space metric: standardized or raw");
    pool_once->add_option("--out", once.out_path, "output JSON file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evaluate) return run_evaluate(eval_in, eval_pool, eval_out);
        if (*gridsearch) return run_gridsearch(grid_in, grid_pool, grid_out);
        if (*simulate) return run_simulate(study, sim_out);
        if (*pool_once) return run_pool_once(once);
    } catch (const std::exception& e) {
        std::cerr << "lpp: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
