#pragma once

#include "ssaa/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssaa {

// Number of components whose stored bits differ.
std::size_t l0_components(std::span<const double> x, std::span<const double> x_adv);

// Number of (h, w) positions where any channel differs. Flat shapes fall back
// to l0_components.
std::size_t l0_pixels(std::span<const double> x, std::span<const double> x_adv, const Shape& shape);

enum class L0Metric { components, pixels };

std::string to_string(L0Metric metric);
L0Metric l0_metric_from_string(const std::string& name);

// Flattened per-sample attack outcome.
struct SampleRecord {
  std::size_t sample_id = 0;
  ClassLabel true_label = 0;
  std::optional<ClassLabel> target;
  bool success = false;
  ClassLabel original_label = 0;
  ClassLabel final_label = 0;
  std::size_t iterations = 0;
  std::uint64_t mp = 0;
  std::size_t l0_components = 0;
  std::size_t l0_pixels = 0;
  std::int64_t wall_time_ns = 0;

  std::size_t l0(L0Metric metric) const { return metric == L0Metric::pixels ? l0_pixels : l0_components; }
};

struct CampaignSummary {
  std::size_t attempted = 0;
  std::size_t successes = 0;
  std::size_t skipped_misclassified = 0;
  std::size_t skipped_target = 0;  // fixed-target campaigns skip samples whose label is the target
  double sr = 0.0;                 // percentage
  // Statistics over successful samples; absent when there are none.
  std::optional<double> mean_l0;
  std::optional<double> median_l0;
  // Over all attempted samples; absent when nothing was attempted.
  std::optional<double> mean_mp;

  bool operator==(const CampaignSummary&) const = default;
};

/// Aggregates attack outcomes. Median of an even-sized set is the lower of the
/// two middle values.
CampaignSummary summarize(std::span<const SampleRecord> records, L0Metric metric = L0Metric::components);

}  // namespace ssaa
