#include "ssaa/metrics.hpp"

#include "ssaa/error.hpp"

#include <algorithm>
#include <bit>

namespace ssaa {
namespace {

bool differs(double a, double b) { return std::bit_cast<std::uint64_t>(a) != std::bit_cast<std::uint64_t>(b); }

void check_same_length(std::span<const double> x, std::span<const double> x_adv) {
  if (x.size() != x_adv.size()) {
    throw DimensionError("L0 distance between inputs of length " + std::to_string(x.size()) + " and " +
                         std::to_string(x_adv.size()));
  }
}

}  // namespace

std::size_t l0_components(std::span<const double> x, std::span<const double> x_adv) {
  check_same_length(x, x_adv);
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) count += differs(x[i], x_adv[i]) ? 1 : 0;
  return count;
}

std::size_t l0_pixels(std::span<const double> x, std::span<const double> x_adv, const Shape& shape) {
  check_same_length(x, x_adv);
  if (!shape.is_image()) return l0_components(x, x_adv);
  if (shape.size() != x.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match input length " + std::to_string(x.size()));
  }
  const std::size_t plane = shape.pixels();
  std::size_t count = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < shape.channels(); ++c) {
      if (differs(x[c * plane + p], x_adv[c * plane + p])) {
        ++count;
        break;
      }
    }
  }
  return count;
}

std::string to_string(L0Metric metric) { return metric == L0Metric::pixels ? "pixels" : "components"; }

L0Metric l0_metric_from_string(const std::string& name) {
  if (name == "components") return L0Metric::components;
  if (name == "pixels") return L0Metric::pixels;
  throw ConfigError("unknown L0 metric '" + name + "' (expected components or pixels)");
}

CampaignSummary summarize(std::span<const SampleRecord> records, L0Metric metric) {
  CampaignSummary summary;
  summary.attempted = records.size();
  if (records.empty()) return summary;

  std::vector<std::size_t> l0;
  double mp_total = 0.0;
  for (const auto& r : records) {
    mp_total += static_cast<double>(r.mp);
    if (r.success) l0.push_back(r.l0(metric));
  }
  summary.successes = l0.size();
  summary.sr = 100.0 * static_cast<double>(l0.size()) / static_cast<double>(records.size());
  summary.mean_mp = mp_total / static_cast<double>(records.size());
  if (!l0.empty()) {
    std::sort(l0.begin(), l0.end());
    double total = 0.0;
    for (std::size_t v : l0) total += static_cast<double>(v);
    summary.mean_l0 = total / static_cast<double>(l0.size());
    summary.median_l0 = static_cast<double>(l0[(l0.size() - 1) / 2]);
  }
  return summary;
}

}  // namespace ssaa
