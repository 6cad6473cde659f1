#pragma once

#include "ssaa/model.hpp"
#include "ssaa/rng.hpp"
#include "ssaa/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ssaa {

enum class NoiseFamily { folded_gaussian, neg_folded_gaussian, uniform };

std::string to_string(NoiseFamily family);

// theta is the variance for the Gaussian families and the upper end of the
// interval for the uniform family.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::folded_gaussian;
  double theta = 0.0;
};

// |z| with z ~ N(0, theta).
std::vector<double> sample_folded_gaussian(double theta, std::size_t count, RngStream& rng);
// -|z| with z ~ N(0, theta); consumes the stream exactly like the positive sampler.
std::vector<double> sample_neg_folded_gaussian(double theta, std::size_t count, RngStream& rng);
// Uniform on [0, theta].
std::vector<double> sample_uniform(double theta, std::size_t count, RngStream& rng);

std::vector<double> sample(const NoiseSpec& spec, std::size_t count, RngStream& rng);

// Noise used by the expansion probe: one-sided folded Gaussian, or the plain
// symmetric Gaussian for contrast (whose first-order term vanishes).
enum class ProbeNoise { folded, symmetric };

std::string to_string(ProbeNoise noise);

struct ProbeRow {
  double theta = 0.0;
  double empirical = 0.0;        // mean of F_c(x + S e_i) - F_c(x)
  double standard_error = 0.0;   // Monte-Carlo standard error of `empirical`
  double predicted = 0.0;        // sqrt(2 theta / pi) dF_c/dx_i (0 for symmetric noise)
  double ratio = 0.0;            // empirical / predicted, NaN when predicted == 0
};

struct ProbeConfig {
  std::size_t component = 0;
  ClassLabel target_class = 0;
  std::vector<double> thetas;
  std::size_t trials = 100000;
  ProbeNoise noise = ProbeNoise::folded;
};

inline constexpr std::size_t kMinProbeTrials = 10000;

/// Monte-Carlo check of the first-order small-variance expansion of
/// E[F_c(x + S e_i)]. Requires x_i + 4 sqrt(theta) <= 1 (and, for symmetric
/// noise, x_i - 4 sqrt(theta) >= 0) so that clipping never enters.
std::vector<ProbeRow> expansion_probe(const Classifier& model, const InputVector& x, const ProbeConfig& config,
                                      RngStream& rng);

}  // namespace ssaa
