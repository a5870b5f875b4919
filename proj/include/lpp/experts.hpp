#pragma once

#include <lpp/density.hpp>
#include <lpp/score_matrix.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lpp {

/// Hyperparameters of the default conjugate prior: mean 0, precision scale * I, IG(shape, rate).
struct NigPrior {
    double precision_scale = 1e-6;
    double shape = 0.01;
    double rate = 0.01;
};

/**
 * Normal-inverse-gamma posterior of a Gaussian linear regression,
 *
 *   beta | sigma^2 ~ N(coefficient_mean, sigma^2 * precision^{-1}),   sigma^2 ~ IG(shape_a, rate_b).
 *
 * The design vector is (1, x[covariate_indices[0]], x[covariate_indices[1]], ...): the intercept
 * always leads, and the expert never reads a covariate that is not listed.
 */
struct NigPosterior {
    Eigen::VectorXd coefficient_mean;
    Eigen::MatrixXd precision;
    double shape_a = 0.0;
    double rate_b = 0.0;
    std::vector<std::size_t> covariate_indices;

    Eigen::Index dimension() const noexcept { return coefficient_mean.size(); }
};

NigPosterior diffuse_nig_prior(std::vector<std::size_t> covariate_indices, const NigPrior& prior = {});

/// Throws ParameterError unless precision is symmetric (1e-10) and positive definite and a, b > 0.
void validate(const NigPosterior& posterior);

/// Design vector for the expert from a full covariate vector.
Eigen::VectorXd design_vector(const NigPosterior& posterior, std::span<const double> covariates);

/// One-observation conjugate update; x is the design vector (leading 1 included).
NigPosterior nig_update(const NigPosterior& posterior, const Eigen::VectorXd& x, double y);

/// Conjugate update on a batch; rows of X are design vectors.
NigPosterior nig_update_batch(const NigPosterior& posterior, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Posterior predictive: Student-t with 2a degrees of freedom, location x'm,
/// and scale sqrt(b/a * (1 + x' precision^{-1} x)).
PredictiveDensity nig_predictive(const NigPosterior& posterior, const Eigen::VectorXd& x);

/// A named Bayesian linear-regression expert that reads a subset of the covariates.
class RegressionExpert {
public:
    RegressionExpert(std::string name, std::vector<std::size_t> covariate_indices, const NigPrior& prior = {});
    RegressionExpert(std::string name, NigPosterior posterior);

    const std::string& name() const noexcept { return name_; }
    const NigPosterior& posterior() const noexcept { return posterior_; }

    PredictiveDensity predict(std::span<const double> covariates) const;
    void observe(std::span<const double> covariates, double y);

private:
    std::string name_;
    NigPosterior posterior_;
};

/// Externally supplied expert log predictive densities, T steps by K experts.
class ExpertScoreTable {
public:
    ExpertScoreTable() = default;
    ExpertScoreTable(std::vector<std::string> names, ScoreMatrix scores);
    explicit ExpertScoreTable(std::vector<std::string> names);

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t experts() const noexcept { return names_.size(); }
    std::size_t steps() const noexcept { return scores_.rows(); }
    const ScoreMatrix& matrix() const noexcept { return scores_; }

    /// log p_k(y_t); IndexError when either index is out of range.
    double score(std::size_t expert, std::size_t step) const;
    std::span<const double> row(std::size_t step) const;

    void push_row(std::span<const double> scores) { scores_.push_row(scores); }

private:
    std::vector<std::string> names_;
    ScoreMatrix scores_;
};

}  // namespace lpp
