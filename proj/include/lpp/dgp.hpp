#pragma once

#include <lpp/density.hpp>
#include <lpp/pooling_space.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lpp {

enum class NoiseFamily { Gaussian, Laplace };

/**
 * Linear data-generating process y = sum_j coefficients[j] * x_j + noise with independent
 * standard-normal covariates. The pooling point of an observation is its covariate vector.
 */
struct DgpConfig {
    std::vector<double> coefficients{1.0, 1.0};
    double noise_sd = 1.0;
    NoiseFamily noise = NoiseFamily::Gaussian;
    std::size_t sample_size = 2000;
    std::uint64_t seed = 1;
};

struct DgpSample {
    std::vector<double> x;
    double y = 0.0;
};

/// Throws ParameterError for an empty coefficient vector, negative noise sd, or N < 2.
void validate(const DgpConfig& cfg);

/// Mean and stddev of y given the pooling point z (= covariates).
struct GaussianConditional {
    double mean = 0.0;
    double stddev = 1.0;
};

/// The conditional law of y at z; UnsupportedDgpError unless the noise is Gaussian with sd > 0.
GaussianConditional conditional_law(const DgpConfig& cfg, std::span<const double> z);

/// Reproducible draws from the process; the same config always yields the same dataset.
std::vector<DgpSample> generate_dgp(const DgpConfig& cfg);

/// Same, drawing from a caller-owned generator.
std::vector<DgpSample> generate_dgp(const DgpConfig& cfg, Rng& rng);

}  // namespace lpp
