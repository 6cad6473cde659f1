#pragma once

#include "ssaa/attack.hpp"
#include "ssaa/dataset.hpp"
#include "ssaa/metrics.hpp"
#include "ssaa/model.hpp"
#include "ssaa/noise.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssaa {

inline constexpr const char* kVersion = "ssaa 1.0.0";

using Json = nlohmann::ordered_json;

enum class TargetPolicy { none, fixed, random };

std::string to_string(TargetPolicy policy);
TargetPolicy target_policy_from_string(const std::string& name);

struct DatasetSource {
  enum class Kind { synthetic, idx, memory };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;
  std::string images;
  std::string labels;

  bool operator==(const DatasetSource&) const = default;
};

LabeledDataset load_dataset(const DatasetSource& source);

struct CampaignConfig {
  // attack.target and attack.stream are assigned per sample by the campaign.
  AttackConfig attack;
  DatasetSource dataset;
  std::string model_path;
  std::optional<std::size_t> limit;
  TargetPolicy target_policy = TargetPolicy::none;
  std::optional<ClassLabel> fixed_target;
  L0Metric l0_metric = L0Metric::components;
  std::size_t jobs = 1;
  std::string output_path;

  bool operator==(const CampaignConfig&) const = default;
};

struct SampleTrace {
  std::size_t sample_id = 0;
  std::vector<IterationRecord> history;
};

struct Report {
  CampaignConfig config;
  std::string version = kVersion;
  std::vector<SampleRecord> samples;
  CampaignSummary summary;
  std::vector<SampleTrace> traces;       // filled when config.attack.record_history
  std::optional<std::vector<ProbeRow>> probe;
};

// Stream index used for the random target of sample k (attacks use stream k).
inline constexpr std::uint64_t kTargetStreamTag = std::uint64_t{1} << 63;

/// Loads model and dataset named by the config, then runs the campaign.
Report run_campaign(const CampaignConfig& config);

/// Attacks every correctly predicted sample among the first `limit` of the
/// dataset. Sample k uses RngStream(seed, k); random targets come from
/// RngStream(seed, k | kTargetStreamTag), redrawn until they differ from the
/// true label. Records are merged in sample order whatever the job count.
Report run_campaign(const Classifier& model, const LabeledDataset& dataset, const CampaignConfig& config);

SampleRecord to_record(std::size_t sample_id, ClassLabel true_label, const AttackResult& result);

Json to_json(const CampaignConfig& config);
CampaignConfig campaign_config_from_json(const Json& j);
Json to_json(const SampleRecord& record);
SampleRecord sample_record_from_json(const Json& j);
Json to_json(const CampaignSummary& summary, L0Metric metric);
CampaignSummary campaign_summary_from_json(const Json& j);
Json to_json(const IterationRecord& record);
Json to_json(const std::vector<ProbeRow>& rows);
Json to_json(const Report& report);
Report report_from_json(const Json& j);

std::string report_to_string(const Report& report);
Report parse_report(const std::string& text);
void write_report(const Report& report, const std::string& path);
Report read_report(const std::string& path);

// One line per sample record, header first.
std::string records_to_csv(const Report& report);

enum class SweepAxis { n_samples, max_iter };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct CurveRow {
  double sweep = 0.0;
  double sr = 0.0;
  std::optional<double> mean_l0;
  std::optional<double> median_l0;
  std::optional<double> mean_mp;
};

/// Plot-ready rows sorted by sweep value. All reports must agree on every
/// setting except the swept one.
std::vector<CurveRow> emit_curves(std::span<const Report> reports, SweepAxis axis);
std::string curves_to_csv(std::span<const CurveRow> rows, SweepAxis axis);

}  // namespace ssaa
