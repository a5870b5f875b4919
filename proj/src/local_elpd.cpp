#include <lpp/local_elpd.hpp>

#include <lpp/errors.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

namespace lpp {

LocalElpdEstimate caliper_elpd(const History& history, std::span<const double> z, double rho) {
    return caliper_elpd(history, history.caliper_neighbors(z, rho), rho);
}

LocalElpdEstimate caliper_elpd(const History& history, std::span<const std::size_t> neighbors, double rho) {
    if (!(rho > 0.0)) throw ParameterError("caliper width must be > 0");
    LocalElpdEstimate out{std::vector<double>(history.experts(), 0.0), neighbors.size(), rho};
    if (neighbors.empty()) return out;
    for (std::size_t i : neighbors) {
        if (i >= history.size()) throw IndexError("caliper_elpd: neighbor index out of range");
        const auto& scores = history[i].expert_log_scores;
        for (std::size_t k = 0; k < out.estimate.size(); ++k) out.estimate[k] += scores[k];
    }
    const double n = static_cast<double>(neighbors.size());
    for (double& e : out.estimate) e /= n;
    return out;
}

namespace {

GaussHermiteRule build_gauss_hermite(std::size_t n) {
    // Jacobi matrix of the Hermite recurrence: zero diagonal, off-diagonal sqrt(i/2).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double b = std::sqrt(static_cast<double>(i) / 2.0);
        jacobi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = b;
        jacobi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        rule.nodes[i] = solver.eigenvalues()[col];
        const double v0 = solver.eigenvectors()(0, col);
        rule.weights[i] = mu0 * v0 * v0;
    }
    // Symmetrize: the exact rule is symmetric about zero.
    for (std::size_t i = 0; i < n / 2; ++i) {
        const std::size_t j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(std::size_t n) {
    if (n == 0) throw ParameterError("gauss_hermite: need at least one node");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussHermiteRule>(build_gauss_hermite(n));
    return *slot;
}

double expected_log_score(const PredictiveDensity& predictive, GaussianConditional law, std::size_t nodes) {
    if (!(law.stddev > 0.0) || !std::isfinite(law.mean)) throw ParameterError("expected_log_score: invalid law");
    const GaussHermiteRule& rule = gauss_hermite(nodes);
    // E[f(Y)] = pi^{-1/2} sum_i w_i f(mean + sqrt(2) sd x_i).
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double y = law.mean + std::numbers::sqrt2 * law.stddev * rule.nodes[i];
        total += rule.weights[i] * predictive.log_density(y);
    }
    return total / std::sqrt(std::numbers::pi);
}

double true_local_elpd(const PredictiveDensity& predictive, std::span<const double> z, const DgpConfig& dgp,
                       std::size_t nodes) {
    return expected_log_score(predictive, conditional_law(dgp, z), nodes);
}

}  // namespace lpp
