#include <lpp/pools.hpp>

#include <lpp/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace lpp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Sum over rows of peak_t + log(w . lik_t), accumulated exactly as the EM loop does.
double shifted_objective(const std::vector<double>& w, const std::vector<double>& lik, const std::vector<double>& peak,
                         std::size_t k) {
    double total = 0.0;
    for (std::size_t t = 0; t < peak.size(); ++t) {
        double mix = 0.0;
        for (std::size_t j = 0; j < k; ++j) mix += w[j] * lik[t * k + j];
        total += peak[t] + std::log(mix);
    }
    return std::isnan(total) ? kNegInf : total;
}

/**
 * EM crawls when the optimum lies on a face of the simplex, so the EM answer is finished
 * with active-set Newton steps on the (concave) objective. The working point may step onto
 * a face without improving; w only ever moves to strictly better points, each of which is
 * appended to trace. Returns the number of such improvements.
 */
int newton_polish(std::vector<double>& w, const std::vector<double>& lik, const std::vector<double>& peak,
                  std::size_t k, std::vector<double>* trace) {
    constexpr int kMaxSteps = 100;
    const std::size_t rows = peak.size();
    const double n = static_cast<double>(rows);
    double best = shifted_objective(w, lik, peak, k);
    if (!std::isfinite(best) || k < 2) return 0;

    int improvements = 0;
    std::vector<double> x = w;
    double f = best;
    Eigen::VectorXd grad(k);
    Eigen::MatrixXd curv(k, k);
    for (int step = 0; step < kMaxSteps; ++step) {
        // Gradient and negated Hessian.
        grad.setZero();
        curv.setZero();
        for (std::size_t t = 0; t < rows; ++t) {
            const Eigen::Map<const Eigen::VectorXd> l(&lik[t * k], static_cast<Eigen::Index>(k));
            double mix = 0.0;
            for (std::size_t j = 0; j < k; ++j) mix += x[j] * l[j];
            grad += l / mix;
            curv.noalias() += l * l.transpose() / (mix * mix);
        }

        // Free coordinates: the support plus zero weights whose gradient says they should enter.
        std::vector<std::size_t> free;
        for (std::size_t j = 0; j < k; ++j)
            if (x[j] > 0.0 || grad[j] > n * (1.0 + 1e-12)) free.push_back(j);

        Eigen::VectorXd d;
        while (true) {
            const auto m = static_cast<Eigen::Index>(free.size());
            if (m < 2) return improvements;
            Eigen::MatrixXd a(m, m);
            Eigen::VectorXd g(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                g[i] = grad[free[i]];
                for (Eigen::Index j = 0; j < m; ++j) a(i, j) = curv(free[i], free[j]);
            }
            a.diagonal().array() += 1e-12 * a.diagonal().maxCoeff();
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
            const Eigen::VectorXd u = ldlt.solve(g);
            const Eigen::VectorXd v = ldlt.solve(Eigen::VectorXd::Ones(m));
            // Maximize g.d - d'Ad/2 subject to sum(d) = 0.
            const Eigen::VectorXd dm = u - (u.sum() / v.sum()) * v;
            d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
            bool dropped = false;
            for (Eigen::Index i = 0; i < m; ++i) d[free[i]] = dm[i];
            for (Eigen::Index i = m - 1; i >= 0; --i)
                if (x[free[i]] == 0.0 && dm[i] <= 0.0) {
                    free.erase(free.begin() + i);
                    dropped = true;
                }
            if (!dropped) break;
        }
        if (!d.allFinite() || d.cwiseAbs().maxCoeff() < 1e-15) break;

        double max_step = 1.0;
        std::size_t blocking = k;
        for (std::size_t j = 0; j < k; ++j)
            if (d[j] < 0.0 && x[j] + max_step * d[j] < 0.0) {
                max_step = x[j] / -d[j];
                blocking = j;
            }

        auto move = [&](double alpha, bool to_face) {
            std::vector<double> c(k);
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                c[j] = (to_face && j == blocking) ? 0.0 : std::max(0.0, x[j] + alpha * d[j]);
                sum += c[j];
            }
            for (double& v : c) v /= sum;
            return c;
        };

        std::vector<double> candidate;
        double f_new = kNegInf;
        bool to_face = false;
        if (blocking < k) {
            // Stepping onto the face is always allowed; the next iteration continues from there.
            candidate = move(max_step, true);
            f_new = shifted_objective(candidate, lik, peak, k);
            to_face = f_new >= f || max_step < 1e-12;
        }
        if (!to_face) {
            double alpha = max_step;
            for (int halving = 0; halving < 60; ++halving, alpha *= 0.5) {
                candidate = move(alpha, false);
                f_new = shifted_objective(candidate, lik, peak, k);
                if (f_new > f) break;
            }
            if (!(f_new > f)) break;
        }

        const double gain = f_new - f;
        x = std::move(candidate);
        f = f_new;
        if (f > best) {
            best = f;
            w = x;
            ++improvements;
            if (trace) trace->push_back(best);
        }
        if (!to_face && gain <= 1e-15 * std::max(1.0, std::abs(f))) break;
    }
    return improvements;
}

}  // namespace

std::string to_string(const ScalingRule& rule) {
    if (std::holds_alternative<NaturalScaling>(rule)) return "natural";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, std::get<FixedScaling>(rule).tau);
    return std::string(buf, res.ptr);
}

ScalingRule parse_scaling(const std::string& text) {
    if (text == "natural" || text == "n") return NaturalScaling{};
    double tau = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), tau);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(tau) || tau < 0.0)
        throw ParameterError("scaling rule must be 'natural' or a finite tau >= 0, got '" + text + "'");
    return FixedScaling{tau};
}

PoolWeights equal_weights(std::size_t experts) { return PoolWeights::equal(experts); }

PoolWeights softmax_weights(const LocalElpdEstimate& estimate, const ScalingRule& rule) {
    const std::size_t k = estimate.estimate.size();
    if (k == 0) throw DimensionError("softmax_weights: no experts");
    double scale = 0.0;
    if (std::holds_alternative<NaturalScaling>(rule)) {
        scale = static_cast<double>(estimate.neighbor_count);
    } else {
        scale = std::get<FixedScaling>(rule).tau;
        if (!std::isfinite(scale) || scale < 0.0) throw ParameterError("softmax_weights: tau must be finite and >= 0");
    }
    if (scale == 0.0) return PoolWeights::equal(k);

    std::vector<double> logits(k);
    double peak = kNegInf;
    for (std::size_t i = 0; i < k; ++i) {
        if (std::isnan(estimate.estimate[i])) throw ParameterError("softmax_weights: NaN estimate");
        logits[i] = scale * estimate.estimate[i];
        peak = std::max(peak, logits[i]);
    }
    // Every expert at -infinity is a tie.
    if (peak == kNegInf) return PoolWeights::equal(k);
    double sum = 0.0;
    for (double& l : logits) {
        l = std::exp(l - peak);
        sum += l;
    }
    for (double& l : logits) l /= sum;
    return PoolWeights(std::move(logits));
}

double pool_objective(const PoolWeights& weights, const ScoreMatrix& scores) {
    if (weights.size() != scores.experts()) throw DimensionError("pool_objective: weight/expert count mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < scores.rows(); ++t) total += pooled_log_density(weights, scores.row(t));
    return total;
}

OptimizerResult optimize_pool_weights(const ScoreMatrix& scores, const OptimizerOptions& options) {
    const std::size_t rows = scores.rows();
    const std::size_t k = scores.experts();
    if (rows == 0 || k == 0) throw DimensionError("optimize_pool_weights: empty score matrix");

    // Row-wise max-subtracted likelihoods: lik[t][j] = exp(score_tj - peak_t), each row's max is 1.
    std::vector<double> peak(rows);
    std::vector<double> lik(rows * k);
    for (std::size_t t = 0; t < rows; ++t) {
        const auto row = scores.row(t);
        peak[t] = *std::max_element(row.begin(), row.end());
        for (std::size_t j = 0; j < k; ++j)
            lik[t * k + j] = peak[t] == kNegInf ? 0.0 : std::exp(row[j] - peak[t]);
    }

    std::vector<double> w(k, 1.0 / static_cast<double>(k));
    std::vector<double> next(k);
    auto objective_and_step = [&](bool accumulate) {
        double total = 0.0;
        std::fill(next.begin(), next.end(), 0.0);
        std::size_t informative = 0;
        for (std::size_t t = 0; t < rows; ++t) {
            if (peak[t] == kNegInf) {
                total = kNegInf;
                continue;
            }
            const double* l = &lik[t * k];
            double mix = 0.0;
            for (std::size_t j = 0; j < k; ++j) mix += w[j] * l[j];
            total += peak[t] + std::log(mix);
            if (accumulate && mix > 0.0) {
                ++informative;
                for (std::size_t j = 0; j < k; ++j) next[j] += w[j] * l[j] / mix;
            }
        }
        return std::pair{total, informative};
    };

    OptimizerResult result{PoolWeights::equal(k), 0.0, 0, false, {}};
    auto [objective, informative] = objective_and_step(true);
    if (options.record_trace) result.trace.push_back(objective);

    // No row carries information about the weights (all -inf rows): any weights are optimal.
    if (informative == 0) {
        result.objective = objective;
        result.converged = true;
        return result;
    }

    for (int it = 0; it < options.max_iterations; ++it) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            next[j] /= static_cast<double>(informative);
            if (next[j] < options.clamp_below) next[j] = 0.0;
            sum += next[j];
        }
        for (std::size_t j = 0; j < k; ++j) w[j] = next[j] / sum;

        const double previous = objective;
        std::tie(objective, informative) = objective_and_step(true);
        result.iterations = it + 1;
        if (options.record_trace) result.trace.push_back(objective);
        const double improvement = objective - previous;
        if (improvement <= options.relative_tolerance * std::max(std::abs(previous), std::numeric_limits<double>::min())) {
            result.converged = true;
            break;
        }
    }

    // A finite objective means every row has a finite peak and a positive pooled likelihood.
    if (std::isfinite(objective))
        result.iterations += newton_polish(w, lik, peak, k, options.record_trace ? &result.trace : nullptr);

    result.weights = PoolWeights(w);
    result.objective = pool_objective(result.weights, scores);
    return result;
}

ScoreMatrix history_scores(const History& history, std::span<const std::size_t> rows) {
    ScoreMatrix m(history.experts());
    m.reserve(rows.size());
    for (std::size_t i : rows) m.push_row(history[i].expert_log_scores);
    return m;
}

ScoreMatrix history_scores(const History& history) {
    ScoreMatrix m(history.experts());
    m.reserve(history.size());
    for (const PredictionRecord& r : history.records()) m.push_row(r.expert_log_scores);
    return m;
}

PoolWeights local_opt_weights(const History& history, std::span<const double> z, double rho,
                              const OptimizerOptions& options) {
    return local_opt_weights(history, history.caliper_neighbors(z, rho), options);
}

PoolWeights local_opt_weights(const History& history, std::span<const std::size_t> neighbors,
                              const OptimizerOptions& options) {
    if (neighbors.empty()) return PoolWeights::equal(history.experts());
    return optimize_pool_weights(history_scores(history, neighbors), options).weights;
}

PredictiveDensity assemble_pool(const PoolWeights& weights, std::vector<PredictiveDensity> densities) {
    return PredictiveDensity::mixture(weights, std::move(densities));
}

}  // namespace lpp
