#include <lpp/density.hpp>

#include <lpp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lpp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double value, const char* what) {
    if (!std::isfinite(value) || !(value > 0.0))
        throw ParameterError(std::string(what) + " must be finite and > 0, got " + std::to_string(value));
}

void require_finite(double value, const char* what) {
    if (!std::isfinite(value))
        throw ParameterError(std::string(what) + " must be finite, got " + std::to_string(value));
}

double gaussian_log_pdf(const Gaussian& g, double y) {
    const double u = (y - g.mean) / g.stddev;
    return -kHalfLog2Pi - std::log(g.stddev) - 0.5 * u * u;
}

double student_log_pdf(const StudentT& t, double y) {
    const double u = (y - t.location) / t.scale;
    const double nu = t.dof;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi) - std::log(t.scale) -
           0.5 * (nu + 1.0) * std::log1p(u * u / nu);
}

}  // namespace

PredictiveDensity PredictiveDensity::gaussian(double mean, double stddev) {
    require_finite(mean, "gaussian mean");
    require_positive(stddev, "gaussian stddev");
    return PredictiveDensity(Gaussian{mean, stddev});
}

PredictiveDensity PredictiveDensity::student_t(double location, double scale, double dof) {
    require_finite(location, "student-t location");
    require_positive(scale, "student-t scale");
    require_positive(dof, "student-t dof");
    return PredictiveDensity(StudentT{location, scale, dof});
}

PredictiveDensity PredictiveDensity::mixture(PoolWeights weights, std::vector<PredictiveDensity> components) {
    if (weights.size() != components.size())
        throw DimensionError("mixture: " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(components.size()) + " components");
    return PredictiveDensity(Mixture{std::move(weights), std::move(components)});
}

double PredictiveDensity::log_density(double y) const {
    if (std::isnan(y)) throw ParameterError("log_density: y is NaN");
    if (std::isinf(y)) return kNegInf;
    return std::visit(Overloaded{
                          [y](const Gaussian& g) { return gaussian_log_pdf(g, y); },
                          [y](const StudentT& t) { return student_log_pdf(t, y); },
                          [y](const Mixture& m) {
                              std::vector<double> lp;
                              lp.reserve(m.components.size());
                              for (std::size_t k = 0; k < m.components.size(); ++k)
                                  lp.push_back(m.weights[k] > 0.0 ? m.components[k].log_density(y) : kNegInf);
                              return pooled_log_density(m.weights, lp);
                          },
                      },
                      value_);
}

double PredictiveDensity::sample(Rng& rng) const {
    return std::visit(Overloaded{
                          [&rng](const Gaussian& g) {
                              return std::normal_distribution<double>(g.mean, g.stddev)(rng);
                          },
                          [&rng](const StudentT& t) {
                              const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
                              const double chi2 = std::gamma_distribution<double>(0.5 * t.dof, 2.0)(rng);
                              return t.location + t.scale * z / std::sqrt(chi2 / t.dof);
                          },
                          [&rng](const Mixture& m) {
                              const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                              double cumulative = 0.0;
                              std::size_t pick = m.weights.argmax();
                              for (std::size_t k = 0; k < m.weights.size(); ++k) {
                                  if (m.weights[k] <= 0.0) continue;
                                  cumulative += m.weights[k];
                                  pick = k;
                                  if (u < cumulative) break;
                              }
                              return m.components[pick].sample(rng);
                          },
                      },
                      value_);
}

double PredictiveDensity::mean() const {
    return std::visit(Overloaded{
                          [](const Gaussian& g) { return g.mean; },
                          [](const StudentT& t) {
                              return t.dof > 1.0 ? t.location : std::numeric_limits<double>::quiet_NaN();
                          },
                          [](const Mixture& m) {
                              double mu = 0.0;
                              for (std::size_t k = 0; k < m.weights.size(); ++k)
                                  if (m.weights[k] > 0.0) mu += m.weights[k] * m.components[k].mean();
                              return mu;
                          },
                      },
                      value_);
}

double PredictiveDensity::variance() const {
    return std::visit(Overloaded{
                          [](const Gaussian& g) { return g.stddev * g.stddev; },
                          [](const StudentT& t) {
                              return t.dof > 2.0 ? t.scale * t.scale * t.dof / (t.dof - 2.0)
                                                 : std::numeric_limits<double>::infinity();
                          },
                          [this](const Mixture& m) {
                              const double mu = mean();
                              double second = 0.0;
                              for (std::size_t k = 0; k < m.weights.size(); ++k) {
                                  if (m.weights[k] <= 0.0) continue;
                                  const double mk = m.components[k].mean();
                                  second += m.weights[k] * (m.components[k].variance() + mk * mk);
                              }
                              return second - mu * mu;
                          },
                      },
                      value_);
}

double log_sum_exp(std::span<const double> values) {
    double peak = kNegInf;
    for (double v : values) {
        if (std::isnan(v)) throw ParameterError("log_sum_exp: NaN input");
        peak = std::max(peak, v);
    }
    if (peak == kNegInf) return kNegInf;
    if (peak == std::numeric_limits<double>::infinity()) return peak;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - peak);
    return peak + std::log(sum);
}

double pooled_log_density(const PoolWeights& weights, std::span<const double> expert_log_densities) {
    if (weights.size() != expert_log_densities.size())
        throw DimensionError("pooled_log_density: " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(expert_log_densities.size()) + " log densities");
    // Factor the peak out of the lp values and divide by the active weight mass, so that
    // equal inputs come back exactly regardless of rounding in the weights.
    double peak = kNegInf;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double lp = expert_log_densities[k];
        if (std::isnan(lp)) throw ParameterError("pooled_log_density: NaN expert log density");
        if (weights[k] > 0.0) peak = std::max(peak, lp);
    }
    if (peak == kNegInf) return kNegInf;
    if (std::isinf(peak)) throw ParameterError("pooled_log_density: +infinity expert log density");
    double sum = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        sum += weights[k] * std::exp(expert_log_densities[k] - peak);
        mass += weights[k];
    }
    return peak + std::log(sum / mass);
}

}  // namespace lpp
