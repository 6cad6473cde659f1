#include "ssaa/noise.hpp"

#include "ssaa/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ssaa {
namespace {

void check_theta(double theta, const char* what) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw ParameterError(std::string(what) + ": theta must be a finite value >= 0, got " + std::to_string(theta));
  }
}

}  // namespace

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::folded_gaussian: return "folded-gaussian";
    case NoiseFamily::neg_folded_gaussian: return "neg-folded-gaussian";
    case NoiseFamily::uniform: return "uniform";
  }
  return "unknown";
}

std::string to_string(ProbeNoise noise) { return noise == ProbeNoise::folded ? "folded" : "symmetric"; }

std::vector<double> sample_folded_gaussian(double theta, std::size_t count, RngStream& rng) {
  check_theta(theta, "folded gaussian");
  const double sd = std::sqrt(theta);
  std::vector<double> out(count);
  for (auto& s : out) s = std::abs(sd * rng.normal());
  return out;
}

std::vector<double> sample_neg_folded_gaussian(double theta, std::size_t count, RngStream& rng) {
  auto out = sample_folded_gaussian(theta, count, rng);
  for (auto& s : out) s = -s;
  return out;
}

std::vector<double> sample_uniform(double theta, std::size_t count, RngStream& rng) {
  check_theta(theta, "uniform");
  std::vector<double> out(count);
  // uniform() < 1, so theta itself is only reached through rounding.
  for (auto& s : out) s = theta * rng.uniform();
  return out;
}

std::vector<double> sample(const NoiseSpec& spec, std::size_t count, RngStream& rng) {
  switch (spec.family) {
    case NoiseFamily::folded_gaussian: return sample_folded_gaussian(spec.theta, count, rng);
    case NoiseFamily::neg_folded_gaussian: return sample_neg_folded_gaussian(spec.theta, count, rng);
    case NoiseFamily::uniform: return sample_uniform(spec.theta, count, rng);
  }
  return {};
}

std::vector<ProbeRow> expansion_probe(const Classifier& model, const InputVector& x, const ProbeConfig& config,
                                      RngStream& rng) {
  x.validate();
  if (x.size() != model.input_size()) {
    throw DimensionError("probe input has " + std::to_string(x.size()) + " components, model expects " +
                         std::to_string(model.input_size()));
  }
  if (config.component >= x.size()) {
    throw RangeError("probe component " + std::to_string(config.component) + " out of range");
  }
  if (config.target_class >= model.num_classes()) {
    throw RangeError("probe class " + std::to_string(config.target_class) + " out of range");
  }
  if (config.trials < kMinProbeTrials) {
    throw ProbeDomainError("probe needs at least " + std::to_string(kMinProbeTrials) + " trials, got " +
                           std::to_string(config.trials));
  }
  const std::size_t i = config.component;
  const double xi = x.values[i];
  for (double theta : config.thetas) {
    check_theta(theta, "probe");
    const double reach = 4.0 * std::sqrt(theta);
    if (xi + reach > 1.0 || (config.noise == ProbeNoise::symmetric && xi - reach < 0.0)) {
      throw ProbeDomainError("probe component " + std::to_string(i) + " (x_i = " + std::to_string(xi) +
                             ") is too close to the boundary for theta = " + std::to_string(theta));
    }
  }

  const double base = model.forward(x.values)[config.target_class];
  const double slope = model.grad_class(x.values, config.target_class)[i];

  std::vector<ProbeRow> rows;
  std::vector<double> probe = x.values;
  for (double theta : config.thetas) {
    const double sd = std::sqrt(theta);
    // Welford accumulation of the per-trial differences.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t t = 0; t < config.trials; ++t) {
      const double z = sd * rng.normal();
      probe[i] = xi + (config.noise == ProbeNoise::folded ? std::abs(z) : z);
      const double diff = model.forward(probe)[config.target_class] - base;
      const double delta = diff - mean;
      mean += delta / static_cast<double>(t + 1);
      m2 += delta * (diff - mean);
    }
    probe[i] = xi;

    ProbeRow row;
    row.theta = theta;
    row.empirical = mean;
    const auto n = static_cast<double>(config.trials);
    row.standard_error = std::sqrt(m2 / (n - 1.0) / n);
    row.predicted = config.noise == ProbeNoise::folded ? std::sqrt(2.0 * theta / std::numbers::pi) * slope : 0.0;
    row.ratio = row.predicted != 0.0 ? row.empirical / row.predicted : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ssaa
