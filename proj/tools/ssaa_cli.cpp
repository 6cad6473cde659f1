// Command-line front end. Talks to the engine exclusively through the C API.

#include "ssaa/ssaa.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using Json = nlohmann::ordered_json;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(ssaa_status status, const std::string& what) {
  if (status != SSAA_OK) {
    throw CliError(what + ": " + ssaa_status_string(status) + ": " + ssaa_last_error());
  }
}

struct ModelDeleter {
  void operator()(ssaa_model* m) const { ssaa_model_free(m); }
};
struct DatasetDeleter {
  void operator()(ssaa_dataset* d) const { ssaa_dataset_free(d); }
};
struct StringDeleter {
  void operator()(char* s) const { ssaa_string_free(s); }
};
using ModelPtr = std::unique_ptr<ssaa_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<ssaa_dataset, DatasetDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct DatasetOptions {
  std::string images;
  std::string labels;
  std::size_t classes = 4;
  std::size_t per_class = 100;
  std::size_t dim = 64;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    auto* img = app->add_option("--images", images, "IDX image file (magic 0x00000803)");
    auto* lab = app->add_option("--labels", labels, "IDX label file (magic 0x00000801)");
    img->needs(lab);
    lab->needs(img);
    app->add_option("--classes", classes, "synthetic dataset: number of classes")->capture_default_str();
    app->add_option("--per-class", per_class, "synthetic dataset: samples per class")->capture_default_str();
    app->add_option("--dim", dim, "synthetic dataset: input dimension")->capture_default_str();
    app->add_option("--data-seed", seed, "synthetic dataset: generator seed")->capture_default_str();
  }

  Json source() const {
    if (!images.empty()) return Json{{"kind", "idx"}, {"images", images}, {"labels", labels}};
    return Json{{"kind", "synthetic"}, {"classes", classes}, {"per_class", per_class}, {"dim", dim}, {"seed", seed}};
  }

  DatasetPtr load() const {
    ssaa_dataset* d = nullptr;
    check(ssaa_dataset_from_source(source().dump().c_str(), &d), "loading dataset");
    return DatasetPtr(d);
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CliError("cannot open '" + path + "' for writing");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open '" + path + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse (L0) adversarial attacks with folded-Gaussian (FGA, VFGA) and uniform (UA) noise"};
  app.set_version_flag("--version", std::string(ssaa_version()));
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train the reference MLP and write a weight file");
  DatasetOptions train_data;
  train_data.add(train);
  std::vector<std::size_t> hidden{32};
  std::string activation = "tanh";
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::uint64_t train_seed = 1;
  std::string train_out;
  train->add_option("--hidden", hidden, "hidden layer sizes")->capture_default_str();
  train->add_option("--activation", activation, "sigmoid or tanh")
      ->check(CLI::IsMember({"sigmoid", "tanh"}))
      ->capture_default_str();
  train->add_option("--epochs", epochs)->capture_default_str();
  train->add_option("--batch-size", batch_size)->capture_default_str();
  train->add_option("--lr", learning_rate, "learning rate")->capture_default_str();
  train->add_option("--momentum", momentum)->capture_default_str();
  train->add_option("--seed", train_seed, "training seed")->capture_default_str();
  train->add_option("--out", train_out, "weight file to write")->required();

  // attack
  auto* attack = app.add_subcommand("attack", "Run an attack campaign and write a JSON report");
  DatasetOptions attack_data;
  attack_data.add(attack);
  std::string model_path;
  std::string variant = "vfga";
  std::string mode = "untargeted";
  std::optional<std::size_t> target;
  std::string target_policy;
  std::size_t n_samples = 10;
  std::optional<std::size_t> max_iter;
  std::uint64_t attack_seed = 0;
  std::optional<std::size_t> limit;
  bool trace = false;
  std::string l0 = "components";
  std::size_t jobs = 1;
  std::string attack_out;
  std::string csv_out;
  attack->add_option("--model", model_path, "weight file")->required();
  attack->add_option("--variant", variant)
      ->check(CLI::IsMember({"fga-inc", "fga-dec", "vfga", "ua"}))
      ->capture_default_str();
  attack->add_option("--mode", mode)->check(CLI::IsMember({"targeted", "untargeted"}))->capture_default_str();
  attack->add_option("--target", target, "target class for --target-policy fixed");
  attack->add_option("--target-policy", target_policy, "fixed or random (targeted mode)")
      ->check(CLI::IsMember({"none", "fixed", "random"}));
  attack->add_option("--ns", n_samples, "noise samples per selected component")->capture_default_str();
  attack->add_option("--max-iter", max_iter, "iteration cap (default: input dimension)");
  attack->add_option("--seed", attack_seed, "campaign seed")->capture_default_str();
  attack->add_option("--limit", limit, "attack only the first N dataset samples");
  attack->add_flag("--trace", trace, "include per-iteration traces in the report");
  attack->add_option("--l0", l0, "L0 statistic for the summary")
      ->check(CLI::IsMember({"components", "pixels"}))
      ->capture_default_str();
  attack->add_option("--jobs", jobs, "concurrent per-sample attacks")->capture_default_str();
  attack->add_option("--out", attack_out, "report path ('-' for stdout)")->capture_default_str();
  attack->add_option("--csv", csv_out, "also write per-sample records as CSV");

  // probe
  auto* probe = app.add_subcommand("probe", "Monte-Carlo check of the folded-Gaussian first-order expansion");
  DatasetOptions probe_data;
  probe_data.add(probe);
  std::string probe_model;
  std::size_t sample_index = 0;
  std::size_t component = 0;
  std::optional<std::size_t> probe_class;
  std::vector<double> thetas{1e-4, 1e-3};
  std::size_t trials = 100000;
  std::string noise = "folded";
  std::uint64_t probe_seed = 0;
  std::string probe_out;
  probe->add_option("--model", probe_model, "weight file")->required();
  probe->add_option("--sample", sample_index, "dataset sample to probe")->capture_default_str();
  probe->add_option("--component", component, "input component to perturb")->capture_default_str();
  probe->add_option("--class", probe_class, "class probability to track (default: predicted label)");
  probe->add_option("--thetas", thetas, "noise variances")->capture_default_str();
  probe->add_option("--trials", trials, "Monte-Carlo trials per variance")->capture_default_str();
  probe->add_option("--noise", noise)->check(CLI::IsMember({"folded", "symmetric"}))->capture_default_str();
  probe->add_option("--seed", probe_seed)->capture_default_str();
  probe->add_option("--out", probe_out, "output path ('-' for stdout)");

  // curves
  auto* curves = app.add_subcommand("curves", "Turn a sweep of reports into a plot-ready CSV table");
  std::vector<std::string> report_paths;
  std::string axis = "ns";
  std::string curves_out;
  curves->add_option("reports", report_paths, "report files")->required()->expected(2, -1);
  curves->add_option("--axis", axis, "swept setting")->check(CLI::IsMember({"ns", "max-iter"}))->capture_default_str();
  curves->add_option("--out", curves_out, "CSV path ('-' for stdout)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write the synthetic dataset as an IDX pair");
  DatasetOptions gen_data;
  gen_data.add(gen);
  std::string gen_images;
  std::string gen_labels;
  gen->add_option("--out-images", gen_images)->required();
  gen->add_option("--out-labels", gen_labels)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      DatasetPtr data = train_data.load();
      Json config{{"hidden", hidden},         {"activation", activation}, {"epochs", epochs},
                  {"batch_size", batch_size}, {"learning_rate", learning_rate}, {"momentum", momentum},
                  {"seed", train_seed}};
      ssaa_model* m = nullptr;
      check(ssaa_model_train(data.get(), config.dump().c_str(), &m), "training");
      ModelPtr model(m);
      check(ssaa_model_save(model.get(), train_out.c_str()), "saving weights");
      std::cerr << "trained " << ssaa_dataset_input_size(data.get()) << "-input model on "
                << ssaa_dataset_size(data.get()) << " samples, train accuracy "
                << ssaa_model_train_accuracy(model.get()) << ", wrote " << train_out << "\n";
    } else if (*attack) {
      Json config;
      config["variant"] = variant;
      config["mode"] = mode;
      config["n_samples"] = n_samples;
      config["max_iter"] = max_iter ? Json(*max_iter) : Json(nullptr);
      config["seed"] = attack_seed;
      config["trace"] = trace;
      config["target_policy"] = target_policy.empty() ? (mode == "targeted" ? "random" : "none") : target_policy;
      config["target"] = target ? Json(*target) : Json(nullptr);
      config["limit"] = limit ? Json(*limit) : Json(nullptr);
      config["l0"] = l0;
      config["dataset"] = attack_data.source();
      config["model"] = model_path;
      config["jobs"] = jobs;
      config["out"] = attack_out;
      char* raw = nullptr;
      check(ssaa_campaign_run(config.dump().c_str(), &raw), "attack campaign");
      OwnedString report(raw);
      write_text(attack_out, report.get());
      if (!csv_out.empty()) {
        char* csv = nullptr;
        check(ssaa_report_to_csv(report.get(), &csv), "CSV export");
        OwnedString owned_csv(csv);
        write_text(csv_out, owned_csv.get());
      }
      const auto summary = Json::parse(report.get()).at("summary");
      std::cerr << variant << " " << mode << ": " << summary.dump() << "\n";
    } else if (*probe) {
      ssaa_model* m = nullptr;
      check(ssaa_model_load(probe_model.c_str(), &m), "loading model");
      ModelPtr model(m);
      DatasetPtr data = probe_data.load();
      std::vector<double> x(ssaa_dataset_input_size(data.get()));
      std::size_t truth = 0;
      check(ssaa_dataset_get(data.get(), sample_index, x.data(), x.size(), &truth), "reading sample");
      std::size_t cls = 0;
      if (probe_class) {
        cls = *probe_class;
      } else {
        check(ssaa_model_label(model.get(), x.data(), x.size(), &cls), "labelling sample");
      }
      Json config{{"component", component}, {"class", cls},   {"thetas", thetas}, {"trials", trials},
                  {"noise", noise},         {"seed", probe_seed}, {"sample", sample_index}};
      char* raw = nullptr;
      check(ssaa_probe_run(model.get(), x.data(), x.size(), config.dump().c_str(), &raw), "probe");
      OwnedString out(raw);
      write_text(probe_out, out.get());
    } else if (*curves) {
      std::vector<std::string> texts;
      for (const auto& path : report_paths) texts.push_back(read_text(path));
      std::vector<const char*> ptrs;
      for (const auto& t : texts) ptrs.push_back(t.c_str());
      char* raw = nullptr;
      check(ssaa_curves(ptrs.data(), ptrs.size(), axis.c_str(), &raw), "curves");
      OwnedString out(raw);
      write_text(curves_out, out.get());
    } else if (*gen) {
      DatasetPtr data = gen_data.load();
      check(ssaa_dataset_write_idx(data.get(), gen_images.c_str(), gen_labels.c_str()), "writing IDX");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
