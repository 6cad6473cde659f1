#include "ssaa/campaign.hpp"

#include "ssaa/error.hpp"
#include "ssaa/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace ssaa {

std::string to_string(TargetPolicy policy) {
  switch (policy) {
    case TargetPolicy::none: return "none";
    case TargetPolicy::fixed: return "fixed";
    case TargetPolicy::random: return "random";
  }
  return "unknown";
}

TargetPolicy target_policy_from_string(const std::string& name) {
  if (name == "none") return TargetPolicy::none;
  if (name == "fixed") return TargetPolicy::fixed;
  if (name == "random") return TargetPolicy::random;
  throw ConfigError("unknown target policy '" + name + "' (expected none, fixed or random)");
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::n_samples ? "ns" : "max-iter"; }

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "ns" || name == "n_samples") return SweepAxis::n_samples;
  if (name == "max-iter" || name == "max_iter") return SweepAxis::max_iter;
  throw ConfigError("unknown sweep axis '" + name + "' (expected ns or max-iter)");
}

LabeledDataset load_dataset(const DatasetSource& source) {
  switch (source.kind) {
    case DatasetSource::Kind::synthetic: return gen_synthetic(source.synthetic);
    case DatasetSource::Kind::idx: return load_idx(source.images, source.labels);
    case DatasetSource::Kind::memory: break;
  }
  throw ConfigError("an in-memory dataset cannot be reloaded from a config");
}

SampleRecord to_record(std::size_t sample_id, ClassLabel true_label, const AttackResult& result) {
  SampleRecord r;
  r.sample_id = sample_id;
  r.true_label = true_label;
  r.target = result.target;
  r.success = result.success;
  r.original_label = result.original_label;
  r.final_label = result.final_label;
  r.iterations = result.iterations;
  r.mp = result.mp;
  r.l0_components = result.l0_components;
  r.l0_pixels = result.l0_pixels;
  r.wall_time_ns = result.wall_time_ns;
  return r;
}

namespace {

void check_campaign(const CampaignConfig& config) {
  const bool targeted = config.attack.mode == Mode::targeted;
  if (targeted && config.target_policy == TargetPolicy::none) {
    throw ConfigError("targeted campaign needs a target policy (fixed or random)");
  }
  if (!targeted && config.target_policy != TargetPolicy::none) {
    throw ConfigError("untargeted campaign cannot use target policy '" + to_string(config.target_policy) + "'");
  }
  if (config.target_policy == TargetPolicy::fixed && !config.fixed_target) {
    throw ConfigError("fixed target policy without a target class");
  }
  if (config.target_policy != TargetPolicy::fixed && config.fixed_target) {
    throw ConfigError("a target class is only meaningful with the fixed target policy");
  }
  if (config.jobs == 0) throw ConfigError("jobs must be at least 1");
}

ClassLabel draw_target(std::uint64_t seed, std::size_t sample, ClassLabel true_label, std::size_t classes) {
  RngStream rng(seed, kTargetStreamTag | sample);
  ClassLabel t;
  do {
    t = rng.below(classes);
  } while (t == true_label);
  return t;
}

// Per-sample outcome before the ordered merge.
struct Slot {
  enum class State { pending, misclassified, target_is_label, attacked } state = State::pending;
  SampleRecord record;
  std::vector<IterationRecord> history;
};

}  // namespace

Report run_campaign(const CampaignConfig& config) {
  check_campaign(config);
  const ReferenceMLP model = load_weights(config.model_path);
  const LabeledDataset dataset = load_dataset(config.dataset);
  return run_campaign(model, dataset, config);
}

Report run_campaign(const Classifier& model, const LabeledDataset& dataset, const CampaignConfig& config) {
  check_campaign(config);
  if (dataset.input_size() != 0 && dataset.input_size() != model.input_size()) {
    throw DimensionError("dataset inputs have " + std::to_string(dataset.input_size()) +
                         " components, model expects " + std::to_string(model.input_size()));
  }
  const bool targeted = config.attack.mode == Mode::targeted;
  if (targeted && model.num_classes() < 2) throw ConfigError("targeted campaign needs at least two classes");
  if (config.fixed_target && *config.fixed_target >= model.num_classes()) {
    throw RangeError("fixed target " + std::to_string(*config.fixed_target) + " out of range");
  }

  const std::size_t count = std::min(dataset.size(), config.limit.value_or(dataset.size()));
  std::vector<Slot> slots(count);

  auto work = [&](std::size_t k) {
    Slot& slot = slots[k];
    const InputVector& x = dataset.inputs[k];
    const ClassLabel truth = dataset.labels[k];
    if (label(model, x.values) != truth) {
      slot.state = Slot::State::misclassified;
      return;
    }
    AttackConfig attack = config.attack;
    attack.stream = k;
    attack.target.reset();
    if (targeted) {
      if (config.target_policy == TargetPolicy::fixed) {
        if (*config.fixed_target == truth) {
          slot.state = Slot::State::target_is_label;
          return;
        }
        attack.target = config.fixed_target;
      } else {
        attack.target = draw_target(config.attack.seed, k, truth, model.num_classes());
      }
    }
    AttackResult result = run_attack(model, x, attack, truth);
    slot.record = to_record(k, truth, result);
    slot.history = std::move(result.history);
    slot.state = Slot::State::attacked;
  };

  const std::size_t jobs = std::min<std::size_t>(config.jobs, std::max<std::size_t>(count, 1));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < count; ++k) work(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            work(k);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  Report report;
  report.config = config;
  std::size_t misclassified = 0;
  std::size_t target_skips = 0;
  for (std::size_t k = 0; k < count; ++k) {
    switch (slots[k].state) {
      case Slot::State::misclassified: ++misclassified; break;
      case Slot::State::target_is_label: ++target_skips; break;
      case Slot::State::attacked:
        report.samples.push_back(slots[k].record);
        if (config.attack.record_history) report.traces.push_back({k, std::move(slots[k].history)});
        break;
      case Slot::State::pending: break;
    }
  }
  report.summary = summarize(report.samples, config.l0_metric);
  report.summary.skipped_misclassified = misclassified;
  report.summary.skipped_target = target_skips;
  return report;
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_json(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_double(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<std::size_t> optional_size(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::size_t>();
}

Json to_json(const DatasetSource& source) {
  Json j;
  switch (source.kind) {
    case DatasetSource::Kind::synthetic:
      j["kind"] = "synthetic";
      j["classes"] = source.synthetic.classes;
      j["per_class"] = source.synthetic.per_class;
      j["dim"] = source.synthetic.dim;
      j["seed"] = source.synthetic.seed;
      break;
    case DatasetSource::Kind::idx:
      j["kind"] = "idx";
      j["images"] = source.images;
      j["labels"] = source.labels;
      break;
    case DatasetSource::Kind::memory:
      j["kind"] = "memory";
      break;
  }
  return j;
}

DatasetSource dataset_source_from_json(const Json& j) {
  DatasetSource s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "synthetic") {
    s.kind = DatasetSource::Kind::synthetic;
    s.synthetic.classes = j.at("classes").get<std::size_t>();
    s.synthetic.per_class = j.at("per_class").get<std::size_t>();
    s.synthetic.dim = j.at("dim").get<std::size_t>();
    s.synthetic.seed = j.at("seed").get<std::uint64_t>();
  } else if (kind == "idx") {
    s.kind = DatasetSource::Kind::idx;
    s.images = j.at("images").get<std::string>();
    s.labels = j.at("labels").get<std::string>();
  } else if (kind == "memory") {
    s.kind = DatasetSource::Kind::memory;
  } else {
    throw FormatError("unknown dataset kind '" + kind + "'");
  }
  return s;
}

template <class F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const CampaignConfig& config) {
  Json j;
  j["variant"] = to_string(config.attack.variant);
  j["mode"] = to_string(config.attack.mode);
  j["n_samples"] = config.attack.n_samples;
  j["max_iter"] = optional_json(config.attack.max_iter);
  j["seed"] = config.attack.seed;
  j["trace"] = config.attack.record_history;
  j["target_policy"] = to_string(config.target_policy);
  j["target"] = optional_json(config.fixed_target);
  j["limit"] = optional_json(config.limit);
  j["l0"] = to_string(config.l0_metric);
  j["dataset"] = to_json(config.dataset);
  j["model"] = config.model_path;
  j["jobs"] = config.jobs;
  j["out"] = config.output_path;
  return j;
}

CampaignConfig campaign_config_from_json(const Json& j) {
  return parse_guard("campaign config", [&] {
    CampaignConfig c;
    c.attack.variant = variant_from_string(j.at("variant").get<std::string>());
    c.attack.mode = mode_from_string(j.at("mode").get<std::string>());
    c.attack.n_samples = j.value("n_samples", std::size_t{10});
    c.attack.max_iter = optional_size(j, "max_iter");
    c.attack.seed = j.value("seed", std::uint64_t{0});
    c.attack.record_history = j.value("trace", false);
    c.target_policy = target_policy_from_string(j.value("target_policy", std::string("none")));
    c.fixed_target = optional_size(j, "target");
    c.limit = optional_size(j, "limit");
    c.l0_metric = l0_metric_from_string(j.value("l0", std::string("components")));
    if (j.contains("dataset")) c.dataset = dataset_source_from_json(j.at("dataset"));
    c.model_path = j.value("model", std::string());
    c.jobs = j.value("jobs", std::size_t{1});
    c.output_path = j.value("out", std::string());
    return c;
  });
}

Json to_json(const SampleRecord& r) {
  Json j;
  j["sample_id"] = r.sample_id;
  j["true_label"] = r.true_label;
  j["target"] = optional_json(r.target);
  j["success"] = r.success;
  j["original_label"] = r.original_label;
  j["final_label"] = r.final_label;
  j["iterations"] = r.iterations;
  j["mp"] = r.mp;
  j["l0_components"] = r.l0_components;
  j["l0_pixels"] = r.l0_pixels;
  j["wall_time_ns"] = r.wall_time_ns;
  return j;
}

SampleRecord sample_record_from_json(const Json& j) {
  return parse_guard("sample record", [&] {
    SampleRecord r;
    r.sample_id = j.at("sample_id").get<std::size_t>();
    r.true_label = j.at("true_label").get<std::size_t>();
    r.target = optional_size(j, "target");
    r.success = j.at("success").get<bool>();
    r.original_label = j.at("original_label").get<std::size_t>();
    r.final_label = j.at("final_label").get<std::size_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.mp = j.at("mp").get<std::uint64_t>();
    r.l0_components = j.at("l0_components").get<std::size_t>();
    r.l0_pixels = j.at("l0_pixels").get<std::size_t>();
    r.wall_time_ns = j.value("wall_time_ns", std::int64_t{0});
    return r;
  });
}

Json to_json(const CampaignSummary& s, L0Metric metric) {
  Json j;
  j["attempted"] = s.attempted;
  j["successes"] = s.successes;
  j["skipped_misclassified"] = s.skipped_misclassified;
  j["skipped_target"] = s.skipped_target;
  j["sr"] = s.attempted ? Json(s.sr) : Json(nullptr);
  j["l0_metric"] = to_string(metric);
  j["mean_l0"] = optional_json(s.mean_l0);
  j["median_l0"] = optional_json(s.median_l0);
  j["mean_mp"] = optional_json(s.mean_mp);
  return j;
}

CampaignSummary campaign_summary_from_json(const Json& j) {
  return parse_guard("summary", [&] {
    CampaignSummary s;
    s.attempted = j.at("attempted").get<std::size_t>();
    s.successes = j.at("successes").get<std::size_t>();
    s.skipped_misclassified = j.value("skipped_misclassified", std::size_t{0});
    s.skipped_target = j.value("skipped_target", std::size_t{0});
    s.sr = optional_double(j, "sr").value_or(0.0);
    s.mean_l0 = optional_double(j, "mean_l0");
    s.median_l0 = optional_double(j, "median_l0");
    s.mean_mp = optional_double(j, "mean_mp");
    return s;
  });
}

Json to_json(const IterationRecord& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["index"] = r.index;
  j["direction"] = r.direction == Direction::increase ? "increase" : "decrease";
  j["index_increase"] = r.index_increase;
  j["index_decrease"] = r.index_decrease;
  j["theta"] = r.theta;
  j["old_value"] = r.old_value;
  j["new_value"] = r.new_value;
  j["objective"] = r.objective;
  j["best_candidate"] = r.best_candidate;
  j["candidate_scores"] = r.candidate_scores;
  j["gamma_size_after"] = r.gamma_size_after;
  j["label_after"] = r.label_after;
  return j;
}

Json to_json(const std::vector<ProbeRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["theta"] = r.theta;
    j["empirical"] = r.empirical;
    j["standard_error"] = r.standard_error;
    j["predicted"] = r.predicted;
    j["ratio"] = std::isfinite(r.ratio) ? Json(r.ratio) : Json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

Json to_json(const Report& report) {
  Json j;
  j["config"] = to_json(report.config);
  j["version"] = report.version;
  Json samples = Json::array();
  for (const auto& r : report.samples) samples.push_back(to_json(r));
  j["samples"] = std::move(samples);
  j["summary"] = to_json(report.summary, report.config.l0_metric);
  if (report.config.attack.record_history) {
    Json traces = Json::array();
    for (const auto& t : report.traces) {
      Json iterations = Json::array();
      for (const auto& rec : t.history) iterations.push_back(to_json(rec));
      traces.push_back(Json{{"sample_id", t.sample_id}, {"iterations", std::move(iterations)}});
    }
    j["traces"] = std::move(traces);
  }
  if (report.probe) j["probe"] = to_json(*report.probe);
  return j;
}

Report report_from_json(const Json& j) {
  return parse_guard("report", [&] {
    Report r;
    r.config = campaign_config_from_json(j.at("config"));
    r.version = j.at("version").get<std::string>();
    for (const auto& s : j.at("samples")) r.samples.push_back(sample_record_from_json(s));
    r.summary = campaign_summary_from_json(j.at("summary"));
    return r;
  });
}

std::string report_to_string(const Report& report) { return to_json(report).dump(2) + "\n"; }

Report parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

void write_report(const Report& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << report_to_string(report);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Report read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_report(buffer.str());
}

std::string records_to_csv(const Report& report) {
  std::ostringstream out;
  out << "sample_id,true_label,target,success,original_label,final_label,iterations,mp,l0_components,l0_pixels,"
         "wall_time_ns\n";
  for (const auto& r : report.samples) {
    out << r.sample_id << ',' << r.true_label << ',';
    if (r.target) out << *r.target;
    out << ',' << (r.success ? 1 : 0) << ',' << r.original_label << ',' << r.final_label << ',' << r.iterations
        << ',' << r.mp << ',' << r.l0_components << ',' << r.l0_pixels << ',' << r.wall_time_ns << '\n';
  }
  return out.str();
}

std::vector<CurveRow> emit_curves(std::span<const Report> reports, SweepAxis axis) {
  if (reports.size() < 2) throw ConsistencyError("a curve needs at least two reports");

  // Settings that must agree: everything but the swept value and run plumbing.
  auto fixed_part = [axis](CampaignConfig c) {
    if (axis == SweepAxis::n_samples) c.attack.n_samples = 0;
    else c.attack.max_iter.reset();
    c.attack.record_history = false;
    c.jobs = 1;
    c.output_path.clear();
    return c;
  };
  const CampaignConfig reference = fixed_part(reports.front().config);

  std::vector<CurveRow> rows;
  for (const auto& report : reports) {
    if (!(fixed_part(report.config) == reference)) {
      throw ConsistencyError("reports differ in settings other than the swept " + to_string(axis) + " value");
    }
    CurveRow row;
    if (axis == SweepAxis::n_samples) {
      row.sweep = static_cast<double>(report.config.attack.n_samples);
    } else {
      if (!report.config.attack.max_iter) {
        throw ConsistencyError("max-iter sweep needs an explicit max_iter in every report");
      }
      row.sweep = static_cast<double>(*report.config.attack.max_iter);
    }
    row.sr = report.summary.sr;
    row.mean_l0 = report.summary.mean_l0;
    row.median_l0 = report.summary.median_l0;
    row.mean_mp = report.summary.mean_mp;
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) { return a.sweep < b.sweep; });
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].sweep == rows[k - 1].sweep) {
      throw ConsistencyError("two reports share the sweep value " + std::to_string(rows[k].sweep));
    }
  }
  return rows;
}

std::string curves_to_csv(std::span<const CurveRow> rows, SweepAxis axis) {
  std::string out = to_string(axis) + ",sr,mean_l0,median_l0,mean_mp\n";
  // Shortest text that reads back to the same double.
  auto num = [&](double v) {
    char buf[32];
    out.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  auto opt = [&](const std::optional<double>& v) {
    if (v) num(*v);
  };
  for (const auto& r : rows) {
    num(r.sweep);
    out += ',';
    num(r.sr);
    out += ',';
    opt(r.mean_l0);
    out += ',';
    opt(r.median_l0);
    out += ',';
    opt(r.mean_mp);
    out += '\n';
  }
  return out;
}

}  // namespace ssaa
