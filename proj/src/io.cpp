#include <lpp/io.hpp>

#include <lpp/errors.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace lpp {

using nlohmann::json;

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

enum class CellKind { Finite, LogScore };

class CsvReader {
public:
    CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// Next non-terminal line; false at end of input. Blank lines are only allowed at the end.
    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++row_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) {
                if (pending_blank_) fail("", "blank line inside the table");
                return true;
            }
            pending_blank_ = true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& column, const std::string& what) const {
        throw ParseError(source_, row_, column, what);
    }

    double real(std::string_view cell, const std::string& column, CellKind kind) const {
        if (cell.empty()) fail(column, "missing value");
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
            fail(column, "not a number: '" + std::string(cell) + "'");
        if (std::isnan(v)) fail(column, "NaN is not allowed");
        if (kind == CellKind::Finite && !std::isfinite(v)) fail(column, "value must be finite");
        if (kind == CellKind::LogScore && v == std::numeric_limits<double>::infinity())
            fail(column, "log score of +inf is not allowed");
        return v;
    }

    std::int64_t integer(std::string_view cell, const std::string& column) const {
        if (cell.empty()) fail(column, "missing value");
        std::int64_t v = 0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
            fail(column, "not an integer: '" + std::string(cell) + "'");
        if (v < 0) fail(column, "time index must be >= 0");
        return v;
    }

    std::size_t row() const noexcept { return row_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t row_ = 0;
    bool pending_blank_ = false;
};

/// Validates `t,y,z_1..z_d` and returns the index of the first column after the z block.
std::size_t read_leading_columns(const CsvReader& reader, const std::vector<std::string>& columns,
                                 std::size_t& dimension) {
    if (columns.size() < 2 || columns[0] != "t") reader.fail(columns.empty() ? "" : columns[0], "first column must be 't'");
    if (columns[1] != "y") reader.fail(columns[1], "second column must be 'y'");
    std::size_t c = 2;
    dimension = 0;
    while (c < columns.size() && columns[c].rfind("z_", 0) == 0) {
        if (columns[c] != "z_" + std::to_string(dimension + 1))
            reader.fail(columns[c], "expected column 'z_" + std::to_string(dimension + 1) + "'");
        ++dimension;
        ++c;
    }
    if (dimension == 0) reader.fail(c < columns.size() ? columns[c] : "", "missing pooling columns z_1..z_d");
    return c;
}

std::vector<std::string> header_columns(CsvReader& reader, std::string& line) {
    if (!reader.next(line)) reader.fail("", "empty file: missing header row");
    std::vector<std::string> out;
    for (std::string_view cell : split(line)) out.emplace_back(cell);
    return out;
}

void check_time(const CsvReader& reader, std::int64_t t, const std::vector<std::int64_t>& times) {
    if (!times.empty() && t <= times.back())
        reader.fail("t", "time index " + std::to_string(t) + " is not greater than the previous " +
                             std::to_string(times.back()));
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_for_reading(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

ScoredStream parse_score_csv(std::istream& in, const std::string& source) {
    CsvReader reader(in, source);
    std::string line;
    const std::vector<std::string> columns = header_columns(reader, line);
    std::size_t d = 0;
    const std::size_t first_lp = read_leading_columns(reader, columns, d);
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t c = first_lp; c < columns.size(); ++c) {
        if (columns[c].rfind("lp_", 0) != 0 || columns[c].size() == 3)
            reader.fail(columns[c], "expected an expert score column 'lp_<name>'");
        std::string name = columns[c].substr(3);
        if (!seen.insert(name).second) reader.fail(columns[c], "duplicate expert name");
        names.push_back(std::move(name));
    }
    if (names.empty()) reader.fail("", "no expert score columns 'lp_<name>'");

    ScoredStream stream;
    stream.scores = ExpertScoreTable(names);
    std::vector<double> scores(names.size());
    while (reader.next(line)) {
        const std::vector<std::string_view> cells = split(line);
        if (cells.size() != columns.size()) {
            const std::string col = cells.size() < columns.size() ? columns[cells.size()] : "";
            reader.fail(col, "expected " + std::to_string(columns.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        const std::int64_t t = reader.integer(cells[0], columns[0]);
        check_time(reader, t, stream.times);
        const double y = reader.real(cells[1], columns[1], CellKind::Finite);
        PoolingPoint z(d);
        for (std::size_t j = 0; j < d; ++j) z[j] = reader.real(cells[2 + j], columns[2 + j], CellKind::Finite);
        for (std::size_t k = 0; k < names.size(); ++k)
            scores[k] = reader.real(cells[first_lp + k], columns[first_lp + k], CellKind::LogScore);
        stream.times.push_back(t);
        stream.outcomes.push_back(y);
        stream.points.push_back(std::move(z));
        stream.scores.push_row(scores);
    }
    if (stream.size() == 0) reader.fail("", "no data rows");
    return stream;
}

ScoredStream load_score_csv(const std::filesystem::path& path) {
    std::ifstream in = open_for_reading(path);
    return parse_score_csv(in, path.string());
}

void write_score_csv(std::ostream& out, const ScoredStream& stream) {
    validate(stream);
    out << "t,y";
    for (std::size_t j = 0; j < stream.dimension(); ++j) out << ",z_" << j + 1;
    for (const std::string& name : stream.scores.names()) out << ",lp_" << name;
    out << '\n';
    for (std::size_t t = 0; t < stream.size(); ++t) {
        out << stream.times[t] << ',' << format_real(stream.outcomes[t]);
        for (double c : stream.points[t]) out << ',' << format_real(c);
        for (double s : stream.scores.row(t)) out << ',' << format_real(s);
        out << '\n';
    }
}

void write_score_csv(const std::filesystem::path& path, const ScoredStream& stream) {
    std::ofstream out = open_for_writing(path);
    write_score_csv(out, stream);
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<Observation> parse_observation_csv(std::istream& in, const std::string& source) {
    CsvReader reader(in, source);
    std::string line;
    const std::vector<std::string> columns = header_columns(reader, line);
    std::size_t d = 0;
    const std::size_t first_x = read_leading_columns(reader, columns, d);
    const std::size_t p = columns.size() - first_x;
    for (std::size_t j = 0; j < p; ++j)
        if (columns[first_x + j] != "x_" + std::to_string(j + 1))
            reader.fail(columns[first_x + j], "expected column 'x_" + std::to_string(j + 1) + "'");
    if (p == 0) reader.fail("", "missing covariate columns x_1..x_p");

    std::vector<Observation> out;
    std::vector<std::int64_t> times;
    while (reader.next(line)) {
        const std::vector<std::string_view> cells = split(line);
        if (cells.size() != columns.size()) {
            const std::string col = cells.size() < columns.size() ? columns[cells.size()] : "";
            reader.fail(col, "expected " + std::to_string(columns.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        Observation obs;
        obs.time_index = reader.integer(cells[0], columns[0]);
        check_time(reader, obs.time_index, times);
        times.push_back(obs.time_index);
        obs.y = reader.real(cells[1], columns[1], CellKind::Finite);
        for (std::size_t j = 0; j < d; ++j) obs.point.push_back(reader.real(cells[2 + j], columns[2 + j], CellKind::Finite));
        for (std::size_t j = 0; j < p; ++j)
            obs.covariates.push_back(reader.real(cells[first_x + j], columns[first_x + j], CellKind::Finite));
        out.push_back(std::move(obs));
    }
    if (out.empty()) reader.fail("", "no data rows");
    return out;
}

std::vector<Observation> load_observation_csv(const std::filesystem::path& path) {
    std::ifstream in = open_for_reading(path);
    return parse_observation_csv(in, path.string());
}

void write_observation_csv(std::ostream& out, std::span<const Observation> observations) {
    if (observations.empty()) throw DimensionError("write_observation_csv: no observations");
    const std::size_t d = observations.front().point.size();
    const std::size_t p = observations.front().covariates.size();
    out << "t,y";
    for (std::size_t j = 0; j < d; ++j) out << ",z_" << j + 1;
    for (std::size_t j = 0; j < p; ++j) out << ",x_" << j + 1;
    out << '\n';
    for (const Observation& obs : observations) {
        if (obs.point.size() != d || obs.covariates.size() != p)
            throw DimensionError("write_observation_csv: ragged observations");
        out << obs.time_index << ',' << format_real(obs.y);
        for (double v : obs.point) out << ',' << format_real(v);
        for (double v : obs.covariates) out << ',' << format_real(v);
        out << '\n';
    }
}

PredictiveDensity density_from_json(const json& j) {
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "gaussian") return PredictiveDensity::gaussian(j.at("mean").get<double>(), j.at("stddev").get<double>());
        if (type == "student_t")
            return PredictiveDensity::student_t(j.at("location").get<double>(), j.at("scale").get<double>(),
                                                j.at("dof").get<double>());
        if (type == "mixture") {
            std::vector<PredictiveDensity> components;
            for (const json& c : j.at("components")) components.push_back(density_from_json(c));
            return PredictiveDensity::mixture(PoolWeights(j.at("weights").get<std::vector<double>>()),
                                              std::move(components));
        }
        throw ParameterError("unknown density type '" + type + "'");
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed density: ") + e.what());
    }
}

json density_to_json(const PredictiveDensity& density) {
    const auto& v = density.variant();
    if (const auto* g = std::get_if<Gaussian>(&v)) return {{"type", "gaussian"}, {"mean", g->mean}, {"stddev", g->stddev}};
    if (const auto* t = std::get_if<StudentT>(&v))
        return {{"type", "student_t"}, {"location", t->location}, {"scale", t->scale}, {"dof", t->dof}};
    const auto& m = std::get<Mixture>(v);
    json components = json::array();
    for (const PredictiveDensity& c : m.components) components.push_back(density_to_json(c));
    return {{"type", "mixture"},
            {"weights", std::vector<double>(m.weights.begin(), m.weights.end())},
            {"components", std::move(components)}};
}

json to_json(const EvaluationConfig& cfg) {
    json schemes = json::array();
    for (Scheme s : cfg.schemes) schemes.push_back(to_string(s));
    json scalings = json::array();
    for (const ScalingRule& r : cfg.scaling_grid) scalings.push_back(to_string(r));
    return {{"warmup_size", cfg.warmup_size},
            {"history_size", cfg.history_size},
            {"rho_grid", cfg.rho_grid},
            {"scaling_grid", scalings},
            {"schemes", schemes},
            {"metric", cfg.metric == Metric::Standardized ? "standardized" : "raw"},
            {"optimizer",
             {{"relative_tolerance", cfg.optimizer.relative_tolerance},
              {"max_iterations", cfg.optimizer.max_iterations},
              {"clamp_below", cfg.optimizer.clamp_below}}},
            {"seed", cfg.seed}};
}

json to_json(const StudyConfig& cfg) {
    return {{"dgp",
             {{"coefficients", cfg.dgp.coefficients},
              {"noise_sd", cfg.dgp.noise_sd},
              {"noise", cfg.dgp.noise == NoiseFamily::Gaussian ? "gaussian" : "laplace"},
              {"sample_size", cfg.dgp.sample_size},
              {"seed", cfg.dgp.seed}}},
            {"training_size", cfg.training_size},
            {"replications", cfg.replications},
            {"error_rho_grid", cfg.error_rho_grid},
            {"pool_rho_grid", cfg.pool_rho_grid},
            {"eval_points", cfg.eval_points},
            {"prior",
             {{"precision_scale", cfg.prior.precision_scale}, {"shape", cfg.prior.shape}, {"rate", cfg.prior.rate}}},
            {"quadrature_nodes", cfg.quadrature_nodes},
            {"metric", cfg.metric == Metric::Standardized ? "standardized" : "raw"}};
}

json to_json(const RunManifest& manifest) {
    return {{"version", std::string(kVersion)},
            {"command", manifest.command},
            {"seed", manifest.seed},
            {"config", manifest.config},
            {"inputs", manifest.inputs}};
}

void write_steps_csv(std::ostream& out, const EvaluationRun& run) {
    if (run.steps.empty()) throw ProtocolError("write_steps_csv: no evaluation steps");
    const StepResult& first = run.steps.front();
    out << "t,y";
    for (const SchemeStep& s : first.schemes) {
        const std::string_view name = to_string(s.scheme);
        out << ',' << name << "_score," << name << "_rho," << name << "_scaling";
        for (const std::string& e : run.expert_names) out << ',' << name << "_w_" << e;
    }
    for (const std::string& e : run.expert_names) out << ",lp_" << e;
    out << '\n';
    for (const StepResult& step : run.steps) {
        out << step.time_index << ',' << format_real(step.realized_y);
        for (const SchemeStep& s : step.schemes) {
            out << ',' << format_real(s.log_score) << ',' << (s.rho ? format_real(*s.rho) : "") << ','
                << (s.scaling ? to_string(*s.scaling) : "");
            for (double w : s.weights) out << ',' << format_real(w);
        }
        for (double lp : step.expert_log_scores) out << ',' << format_real(lp);
        out << '\n';
    }
}

json summary_json(const EvaluationRun& run) {
    json totals = json::object();
    for (const auto& [scheme, series] : cumulative_scores(run.steps))
        totals[std::string(to_string(scheme))] = series.empty() ? 0.0 : series.back();
    json candidates = json::array();
    for (const CandidateTotal& c : run.candidates) {
        json entry = {{"scheme", to_string(c.scheme)},
                      {"rho", c.rho},
                      {"history_total", c.history_total},
                      {"evaluation_total", c.evaluation_total},
                      {"times_selected", c.times_selected}};
        if (c.scaling) entry["scaling"] = to_string(*c.scaling);
        candidates.push_back(std::move(entry));
    }
    return {{"experts", run.expert_names},
            {"steps", run.steps.size()},
            {"first_time", run.steps.empty() ? json(nullptr) : json(run.steps.front().time_index)},
            {"last_time", run.steps.empty() ? json(nullptr) : json(run.steps.back().time_index)},
            {"totals", totals},
            {"candidates", candidates}};
}

void emit_results(const EvaluationRun& run, const RunManifest& manifest, const std::filesystem::path& directory) {
    if (run.steps.empty()) throw ProtocolError("emit_results: no evaluation steps");
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + directory.string() + "': " + ec.message());

    {
        std::ofstream out = open_for_writing(directory / "steps.csv");
        write_steps_csv(out, run);
    }
    {
        std::ofstream out = open_for_writing(directory / "candidates.csv");
        out << "scheme,rho,scaling,history_total,evaluation_total,times_selected\n";
        for (const CandidateTotal& c : run.candidates)
            out << to_string(c.scheme) << ',' << format_real(c.rho) << ',' << (c.scaling ? to_string(*c.scaling) : "")
                << ',' << format_real(c.history_total) << ',' << format_real(c.evaluation_total) << ','
                << c.times_selected << '\n';
    }
    {
        std::ofstream out = open_for_writing(directory / "summary.json");
        out << summary_json(run).dump(2) << '\n';
    }
    {
        std::ofstream out = open_for_writing(directory / "manifest.json");
        out << to_json(manifest).dump(2) << '\n';
    }
}

namespace {

std::string point_label(const PoolingPoint& z) {
    std::string out;
    for (std::size_t j = 0; j < z.size(); ++j) out += (j ? ";" : "") + format_real(z[j]);
    return out;
}

}  // namespace

void write_study_csv(std::ostream& out, const StudyConfig& cfg, std::span<const ReplicationResult> results) {
    out << "replication,quantity,scheme,expert,rho,z,value\n";
    for (const ReplicationResult& r : results) {
        for (std::size_t p = 0; p < cfg.eval_points.size(); ++p) {
            const std::string z = point_label(cfg.eval_points[p]);
            const std::size_t k = r.true_elpd[p].size();
            for (std::size_t e = 0; e < k; ++e)
                out << r.replication << ",true_elpd,," << e + 1 << ",," << z << ',' << format_real(r.true_elpd[p][e]) << '\n';
            for (std::size_t i = 0; i < cfg.error_rho_grid.size(); ++i) {
                const std::string rho = format_real(cfg.error_rho_grid[i]);
                for (std::size_t e = 0; e < k; ++e) {
                    out << r.replication << ",caliper_estimate,," << e + 1 << ',' << rho << ',' << z << ','
                        << format_real(r.caliper_estimate[p][i][e]) << '\n';
                    out << r.replication << ",estimator_error,," << e + 1 << ',' << rho << ',' << z << ','
                        << format_real(r.caliper_estimate[p][i][e] - r.true_elpd[p][e]) << '\n';
                }
                out << r.replication << ",neighbor_count,,," << rho << ',' << z << ',' << r.neighbor_count[p][i] << '\n';
            }
            for (std::size_t i = 0; i < cfg.pool_rho_grid.size(); ++i) {
                const std::string rho = format_real(cfg.pool_rho_grid[i]);
                out << r.replication << ",expected_log_score,local_dm,," << rho << ',' << z << ','
                    << format_real(r.local_dm_score[p][i]) << '\n';
                out << r.replication << ",expected_log_score,local_opt,," << rho << ',' << z << ','
                    << format_real(r.local_opt_score[p][i]) << '\n';
            }
            out << r.replication << ",expected_log_score,equal,,," << z << ',' << format_real(r.equal_score[p]) << '\n';
            out << r.replication << ",expected_log_score,global_opt,,," << z << ',' << format_real(r.global_opt_score[p])
                << '\n';
        }
        out << r.replication << ",global_natural_max_weight,local_dm,,,," << format_real(r.global_natural_max_weight)
            << '\n';
    }
}

json study_summary_json(const StudyConfig& cfg, std::span<const ReplicationResult> results) {
    json errors = json::array();
    for (const ErrorSample& s : estimator_errors(cfg, results))
        errors.push_back({{"z", cfg.eval_points[s.point_index]},
                          {"expert", s.expert + 1},
                          {"rho", s.rho},
                          {"mean", s.summary.mean},
                          {"stddev", s.summary.stddev},
                          {"standard_error", s.summary.standard_error}});
    json scores = json::array();
    for (const PoolScoreSample& s : pool_scores(cfg, results)) {
        json entry = {{"z", cfg.eval_points[s.point_index]},
                      {"scheme", to_string(s.scheme)},
                      {"mean", s.summary.mean},
                      {"standard_error", s.summary.standard_error}};
        if (s.rho) entry["rho"] = *s.rho;
        scores.push_back(std::move(entry));
    }
    const std::vector<double> max_weights = polarization(results);
    std::size_t polarized = 0;
    for (double w : max_weights) polarized += w > 0.99;
    return {{"replications", results.size()},
            {"estimator_errors", errors},
            {"expected_log_scores", scores},
            {"polarization",
             {{"threshold", 0.99},
              {"polarized", polarized},
              {"rate", results.empty() ? 0.0 : static_cast<double>(polarized) / static_cast<double>(results.size())}}}};
}

}  // namespace lpp
