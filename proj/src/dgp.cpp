#include <lpp/dgp.hpp>

#include <lpp/errors.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace lpp {

void validate(const DgpConfig& cfg) {
    if (cfg.coefficients.empty()) throw ParameterError("dgp: no covariates");
    for (double b : cfg.coefficients)
        if (!std::isfinite(b)) throw ParameterError("dgp: non-finite coefficient");
    if (!std::isfinite(cfg.noise_sd) || cfg.noise_sd < 0.0) throw ParameterError("dgp: noise sd must be >= 0");
    if (cfg.sample_size < 2) throw ParameterError("dgp: sample size must be at least 2");
}

GaussianConditional conditional_law(const DgpConfig& cfg, std::span<const double> z) {
    if (cfg.noise != NoiseFamily::Gaussian)
        throw UnsupportedDgpError("conditional law: only Gaussian noise has a quadrature oracle");
    if (!(cfg.noise_sd > 0.0)) throw UnsupportedDgpError("conditional law: degenerate (zero) noise");
    if (z.size() != cfg.coefficients.size())
        throw DimensionError("conditional law: point has " + std::to_string(z.size()) + " coordinates, dgp has " +
                             std::to_string(cfg.coefficients.size()) + " covariates");
    double mean = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) mean += cfg.coefficients[j] * z[j];
    return {mean, cfg.noise_sd};
}

std::vector<DgpSample> generate_dgp(const DgpConfig& cfg) {
    Rng rng(cfg.seed);
    return generate_dgp(cfg, rng);
}

std::vector<DgpSample> generate_dgp(const DgpConfig& cfg, Rng& rng) {
    validate(cfg);
    std::normal_distribution<double> standard(0.0, 1.0);
    std::exponential_distribution<double> exponential(1.0);
    std::bernoulli_distribution coin(0.5);
    // Laplace with scale sd / sqrt(2) has standard deviation sd.
    const double laplace_scale = cfg.noise_sd / std::numbers::sqrt2;

    std::vector<DgpSample> out(cfg.sample_size);
    for (DgpSample& s : out) {
        s.x.resize(cfg.coefficients.size());
        double mean = 0.0;
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            s.x[j] = standard(rng);
            mean += cfg.coefficients[j] * s.x[j];
        }
        double noise = 0.0;
        if (cfg.noise == NoiseFamily::Gaussian) {
            noise = cfg.noise_sd * standard(rng);
        } else {
            noise = laplace_scale * exponential(rng) * (coin(rng) ? 1.0 : -1.0);
        }
        s.y = mean + noise;
    }
    return out;
}

}  // namespace lpp
