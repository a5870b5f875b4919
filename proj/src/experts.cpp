#include <lpp/experts.hpp>

#include <lpp/errors.hpp>

#include <cmath>
#include <string>

namespace lpp {
namespace {

void require_dimension(const NigPosterior& posterior, Eigen::Index n, const char* what) {
    if (n != posterior.dimension())
        throw DimensionError(std::string(what) + ": design vector of length " + std::to_string(n) +
                             ", posterior has dimension " + std::to_string(posterior.dimension()));
}

}  // namespace

NigPosterior diffuse_nig_prior(std::vector<std::size_t> covariate_indices, const NigPrior& prior) {
    const auto p = static_cast<Eigen::Index>(covariate_indices.size() + 1);
    NigPosterior post{
        .coefficient_mean = Eigen::VectorXd::Zero(p),
        .precision = prior.precision_scale * Eigen::MatrixXd::Identity(p, p),
        .shape_a = prior.shape,
        .rate_b = prior.rate,
        .covariate_indices = std::move(covariate_indices),
    };
    validate(post);
    return post;
}

void validate(const NigPosterior& posterior) {
    const Eigen::Index p = posterior.dimension();
    if (p == 0) throw DimensionError("nig posterior: empty coefficient vector");
    if (posterior.precision.rows() != p || posterior.precision.cols() != p)
        throw DimensionError("nig posterior: precision matrix shape does not match coefficients");
    if (static_cast<std::size_t>(p) != posterior.covariate_indices.size() + 1)
        throw DimensionError("nig posterior: coefficient count must be 1 + number of covariates");
    if (!(posterior.shape_a > 0.0) || !std::isfinite(posterior.shape_a))
        throw ParameterError("nig posterior: shape must be > 0");
    if (!(posterior.rate_b > 0.0) || !std::isfinite(posterior.rate_b))
        throw ParameterError("nig posterior: rate must be > 0");
    if (!posterior.coefficient_mean.allFinite() || !posterior.precision.allFinite())
        throw ParameterError("nig posterior: non-finite entries");
    const double asym = (posterior.precision - posterior.precision.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw ParameterError("nig posterior: precision matrix is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(posterior.precision);
    if (llt.info() != Eigen::Success) throw ParameterError("nig posterior: precision matrix is not positive definite");
}

Eigen::VectorXd design_vector(const NigPosterior& posterior, std::span<const double> covariates) {
    Eigen::VectorXd x(posterior.dimension());
    x[0] = 1.0;
    for (std::size_t j = 0; j < posterior.covariate_indices.size(); ++j) {
        const std::size_t index = posterior.covariate_indices[j];
        if (index >= covariates.size())
            throw DimensionError("design vector: covariate " + std::to_string(index) + " requested, only " +
                                 std::to_string(covariates.size()) + " available");
        x[static_cast<Eigen::Index>(j + 1)] = covariates[index];
    }
    return x;
}

NigPosterior nig_update(const NigPosterior& posterior, const Eigen::VectorXd& x, double y) {
    require_dimension(posterior, x.size(), "nig_update");
    if (!std::isfinite(y) || !x.allFinite()) throw ParameterError("nig_update: non-finite observation");

    // Rank-one form: u = P^{-1} x, q = x'u. The residual enters b through e^2 / (1 + q),
    // which avoids the cancellation in y'y + m'Pm - m_n'P_n m_n.
    const Eigen::VectorXd u = posterior.precision.ldlt().solve(x);
    const double q = x.dot(u);
    const double residual = y - x.dot(posterior.coefficient_mean);

    NigPosterior next = posterior;
    next.precision.noalias() += x * x.transpose();
    next.coefficient_mean += u * (residual / (1.0 + q));
    next.shape_a += 0.5;
    next.rate_b += 0.5 * residual * residual / (1.0 + q);
    return next;
}

NigPosterior nig_update_batch(const NigPosterior& posterior, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DimensionError("nig_update_batch: X and y row counts differ");
    if (X.rows() == 0) return posterior;
    require_dimension(posterior, X.cols(), "nig_update_batch");

    NigPosterior next = posterior;
    next.precision = posterior.precision + X.transpose() * X;
    const Eigen::VectorXd rhs = posterior.precision * posterior.coefficient_mean + X.transpose() * y;
    next.coefficient_mean = next.precision.ldlt().solve(rhs);
    next.shape_a = posterior.shape_a + 0.5 * static_cast<double>(X.rows());
    const double quad_prior = posterior.coefficient_mean.dot(posterior.precision * posterior.coefficient_mean);
    const double quad_post = next.coefficient_mean.dot(next.precision * next.coefficient_mean);
    next.rate_b = posterior.rate_b + 0.5 * (y.squaredNorm() + quad_prior - quad_post);
    return next;
}

PredictiveDensity nig_predictive(const NigPosterior& posterior, const Eigen::VectorXd& x) {
    require_dimension(posterior, x.size(), "nig_predictive");
    const double leverage = x.dot(posterior.precision.ldlt().solve(x));
    const double scale2 = posterior.rate_b / posterior.shape_a * (1.0 + leverage);
    return PredictiveDensity::student_t(x.dot(posterior.coefficient_mean), std::sqrt(scale2), 2.0 * posterior.shape_a);
}

RegressionExpert::RegressionExpert(std::string name, std::vector<std::size_t> covariate_indices, const NigPrior& prior)
    : name_(std::move(name)), posterior_(diffuse_nig_prior(std::move(covariate_indices), prior)) {}

RegressionExpert::RegressionExpert(std::string name, NigPosterior posterior)
    : name_(std::move(name)), posterior_(std::move(posterior)) {
    validate(posterior_);
}

PredictiveDensity RegressionExpert::predict(std::span<const double> covariates) const {
    return nig_predictive(posterior_, design_vector(posterior_, covariates));
}

void RegressionExpert::observe(std::span<const double> covariates, double y) {
    posterior_ = nig_update(posterior_, design_vector(posterior_, covariates), y);
}

ExpertScoreTable::ExpertScoreTable(std::vector<std::string> names, ScoreMatrix scores)
    : names_(std::move(names)), scores_(std::move(scores)) {
    if (names_.empty()) throw DimensionError("score table: no experts");
    if (scores_.experts() != names_.size())
        throw DimensionError("score table: " + std::to_string(names_.size()) + " names for " +
                             std::to_string(scores_.experts()) + " score columns");
}

ExpertScoreTable::ExpertScoreTable(std::vector<std::string> names)
    : ExpertScoreTable(names, ScoreMatrix(names.size())) {}

double ExpertScoreTable::score(std::size_t expert, std::size_t step) const {
    if (expert >= experts())
        throw IndexError("score table: expert " + std::to_string(expert) + " out of range (K = " +
                         std::to_string(experts()) + ")");
    if (step >= steps())
        throw IndexError("score table: step " + std::to_string(step) + " out of range (T = " +
                         std::to_string(steps()) + ")");
    return scores_(step, expert);
}

std::span<const double> ExpertScoreTable::row(std::size_t step) const {
    if (step >= steps()) throw IndexError("score table: step " + std::to_string(step) + " out of range");
    return scores_.row(step);
}

}  // namespace lpp
