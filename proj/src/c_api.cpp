#include "ssaa/ssaa.h"

#include "ssaa/attack.hpp"
#include "ssaa/campaign.hpp"
#include "ssaa/dataset.hpp"
#include "ssaa/error.hpp"
#include "ssaa/model.hpp"
#include "ssaa/noise.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

struct ssaa_model {
  ssaa::ReferenceMLP mlp;
};

struct ssaa_dataset {
  ssaa::LabeledDataset data;
};

namespace {

thread_local std::string g_last_error;

ssaa_status fail(ssaa_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the exception hierarchy onto status codes.
template <class F>
ssaa_status guarded(F&& f) {
  try {
    f();
    return SSAA_OK;
  } catch (const ssaa::DimensionError& e) {
    return fail(SSAA_ERR_DIMENSION, e.what());
  } catch (const ssaa::RangeError& e) {
    return fail(SSAA_ERR_RANGE, e.what());
  } catch (const ssaa::FormatError& e) {
    return fail(SSAA_ERR_FORMAT, e.what());
  } catch (const ssaa::IoError& e) {
    return fail(SSAA_ERR_IO, e.what());
  } catch (const ssaa::ParameterError& e) {
    return fail(SSAA_ERR_PARAMETER, e.what());
  } catch (const ssaa::ConfigError& e) {
    return fail(SSAA_ERR_CONFIG, e.what());
  } catch (const ssaa::ExhaustedError& e) {
    return fail(SSAA_ERR_EXHAUSTED, e.what());
  } catch (const ssaa::TrainingDivergence& e) {
    return fail(SSAA_ERR_DIVERGENCE, e.what());
  } catch (const ssaa::ProbeDomainError& e) {
    return fail(SSAA_ERR_PROBE_DOMAIN, e.what());
  } catch (const ssaa::ConsistencyError& e) {
    return fail(SSAA_ERR_CONSISTENCY, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SSAA_ERR_CONFIG, std::string("invalid JSON argument: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SSAA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SSAA_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SSAA_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* what) {
  if (!condition) throw std::invalid_argument(what);
}

ssaa::Json parse_json(const char* text) {
  if (!text || !*text) return ssaa::Json::object();
  return ssaa::Json::parse(text);
}

std::span<const double> input_span(const double* x, std::size_t n) {
  require(x != nullptr || n == 0, "null input pointer");
  return {x, n};
}

ssaa::AttackConfig attack_config_from_json(const ssaa::Json& j) {
  ssaa::AttackConfig c;
  c.variant = ssaa::variant_from_string(j.value("variant", std::string("vfga")));
  c.mode = ssaa::mode_from_string(j.value("mode", std::string("untargeted")));
  if (j.contains("target") && !j.at("target").is_null()) c.target = j.at("target").get<std::size_t>();
  c.n_samples = j.value("n_samples", std::size_t{10});
  if (j.contains("max_iter") && !j.at("max_iter").is_null()) c.max_iter = j.at("max_iter").get<std::size_t>();
  c.seed = j.value("seed", std::uint64_t{0});
  c.stream = j.value("stream", std::uint64_t{0});
  c.record_history = j.value("trace", false);
  return c;
}

}  // namespace

extern "C" {

const char* ssaa_version(void) { return ssaa::kVersion; }

const char* ssaa_status_string(ssaa_status status) {
  switch (status) {
    case SSAA_OK: return "ok";
    case SSAA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SSAA_ERR_DIMENSION: return "dimension error";
    case SSAA_ERR_RANGE: return "range error";
    case SSAA_ERR_FORMAT: return "format error";
    case SSAA_ERR_IO: return "i/o error";
    case SSAA_ERR_PARAMETER: return "parameter error";
    case SSAA_ERR_CONFIG: return "configuration error";
    case SSAA_ERR_EXHAUSTED: return "exhausted";
    case SSAA_ERR_DIVERGENCE: return "training diverged";
    case SSAA_ERR_PROBE_DOMAIN: return "probe domain error";
    case SSAA_ERR_CONSISTENCY: return "consistency error";
    case SSAA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ssaa_last_error(void) { return g_last_error.c_str(); }

void ssaa_string_free(char* str) { std::free(str); }

ssaa_status ssaa_dataset_load_idx(const char* images_path, const char* labels_path, ssaa_dataset** out) {
  if (!images_path || !labels_path || !out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new ssaa_dataset{ssaa::load_idx(images_path, labels_path)}; });
}

ssaa_status ssaa_dataset_synthetic(size_t classes, size_t per_class, size_t dim, uint64_t seed,
                                   ssaa_dataset** out) {
  if (!out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null output handle");
  return guarded([&] { *out = new ssaa_dataset{ssaa::gen_synthetic({classes, per_class, dim, seed})}; });
}

ssaa_status ssaa_dataset_from_source(const char* source_json, ssaa_dataset** out) {
  if (!source_json || !out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ssaa::Json wrapper{{"variant", "vfga"}, {"mode", "untargeted"}, {"dataset", parse_json(source_json)}};
    const auto config = ssaa::campaign_config_from_json(wrapper);
    *out = new ssaa_dataset{ssaa::load_dataset(config.dataset)};
  });
}

ssaa_status ssaa_dataset_write_idx(const ssaa_dataset* dataset, const char* images_path, const char* labels_path) {
  if (!dataset || !images_path || !labels_path) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { ssaa::write_idx(dataset->data, images_path, labels_path); });
}

size_t ssaa_dataset_size(const ssaa_dataset* dataset) { return dataset ? dataset->data.size() : 0; }

size_t ssaa_dataset_input_size(const ssaa_dataset* dataset) { return dataset ? dataset->data.input_size() : 0; }

size_t ssaa_dataset_num_classes(const ssaa_dataset* dataset) { return dataset ? dataset->data.num_classes : 0; }

ssaa_status ssaa_dataset_get(const ssaa_dataset* dataset, size_t index, double* values, size_t capacity,
                             size_t* label) {
  if (!dataset || !values) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  if (index >= dataset->data.size()) return fail(SSAA_ERR_RANGE, "sample index out of range");
  const auto& x = dataset->data.inputs[index];
  if (capacity < x.size()) return fail(SSAA_ERR_DIMENSION, "output buffer too small");
  std::memcpy(values, x.values.data(), x.size() * sizeof(double));
  if (label) *label = dataset->data.labels[index];
  return SSAA_OK;
}

void ssaa_dataset_free(ssaa_dataset* dataset) { delete dataset; }

ssaa_status ssaa_model_train(const ssaa_dataset* dataset, const char* train_config_json, ssaa_model** out) {
  if (!dataset || !out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto j = parse_json(train_config_json);
    ssaa::TrainConfig config;
    if (j.contains("hidden")) config.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("activation")) config.activation = ssaa::activation_from_string(j.at("activation"));
    config.epochs = j.value("epochs", config.epochs);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.momentum = j.value("momentum", config.momentum);
    config.seed = j.value("seed", config.seed);
    *out = new ssaa_model{ssaa::train_reference(dataset->data, config)};
  });
}

ssaa_status ssaa_model_load(const char* path, ssaa_model** out) {
  if (!path || !out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new ssaa_model{ssaa::load_weights(path)}; });
}

ssaa_status ssaa_model_save(const ssaa_model* model, const char* path) {
  if (!model || !path) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { ssaa::save_weights(model->mlp, path); });
}

size_t ssaa_model_input_size(const ssaa_model* model) { return model ? model->mlp.input_size() : 0; }

size_t ssaa_model_num_classes(const ssaa_model* model) { return model ? model->mlp.num_classes() : 0; }

double ssaa_model_train_accuracy(const ssaa_model* model) { return model ? model->mlp.train_accuracy() : 0.0; }

ssaa_status ssaa_model_accuracy(const ssaa_model* model, const ssaa_dataset* dataset, double* out) {
  if (!model || !dataset || !out) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (dataset->data.input_size() != model->mlp.input_size()) {
      throw ssaa::DimensionError("dataset and model input sizes differ");
    }
    *out = ssaa::accuracy(model->mlp, dataset->data);
  });
}

ssaa_status ssaa_model_forward(const ssaa_model* model, const double* x, size_t n, double* probs,
                               size_t num_classes) {
  if (!model || !x || !probs) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (num_classes < model->mlp.num_classes()) throw ssaa::DimensionError("probability buffer too small");
    const auto p = model->mlp.forward(input_span(x, n));
    std::memcpy(probs, p.data(), p.size() * sizeof(double));
  });
}

ssaa_status ssaa_model_grad_class(const ssaa_model* model, const double* x, size_t n, size_t cls, double* grad) {
  if (!model || !x || !grad) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto g = model->mlp.grad_class(input_span(x, n), cls);
    std::memcpy(grad, g.data(), g.size() * sizeof(double));
  });
}

ssaa_status ssaa_model_label(const ssaa_model* model, const double* x, size_t n, size_t* label) {
  if (!model || !x || !label) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *label = ssaa::label(model->mlp, input_span(x, n)); });
}

void ssaa_model_free(ssaa_model* model) { delete model; }

ssaa_status ssaa_attack_run(const ssaa_model* model, const double* x, size_t n, const char* attack_config_json,
                            char** result_json) {
  if (!model || !x || !result_json) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto j = parse_json(attack_config_json);
    const auto config = attack_config_from_json(j);
    ssaa::InputVector input(model->mlp.input_shape().size() == n ? model->mlp.input_shape() : ssaa::Shape::flat(n),
                            std::vector<double>(x, x + n));
    std::optional<ssaa::ClassLabel> reference;
    if (j.contains("reference_label") && !j.at("reference_label").is_null()) {
      reference = j.at("reference_label").get<std::size_t>();
    }
    const auto result = ssaa::run_attack(model->mlp, input, config, reference);
    auto out = ssaa::to_json(ssaa::to_record(0, result.original_label, result));
    out.erase("sample_id");
    out.erase("true_label");
    out["gamma_initial"] = result.gamma_initial;
    out["x_adv"] = result.x_adv.values;
    if (config.record_history) {
      ssaa::Json history = ssaa::Json::array();
      for (const auto& rec : result.history) history.push_back(ssaa::to_json(rec));
      out["history"] = std::move(history);
    }
    *result_json = duplicate(out.dump());
  });
}

ssaa_status ssaa_campaign_run(const char* campaign_config_json, char** report_json) {
  if (!campaign_config_json || !report_json) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto config = ssaa::campaign_config_from_json(parse_json(campaign_config_json));
    *report_json = duplicate(ssaa::report_to_string(ssaa::run_campaign(config)));
  });
}

ssaa_status ssaa_campaign_run_with(const ssaa_model* model, const ssaa_dataset* dataset,
                                   const char* campaign_config_json, char** report_json) {
  if (!model || !dataset || !campaign_config_json || !report_json) {
    return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto config = ssaa::campaign_config_from_json(parse_json(campaign_config_json));
    *report_json = duplicate(ssaa::report_to_string(ssaa::run_campaign(model->mlp, dataset->data, config)));
  });
}

ssaa_status ssaa_report_to_csv(const char* report_json, char** csv) {
  if (!report_json || !csv) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *csv = duplicate(ssaa::records_to_csv(ssaa::parse_report(report_json))); });
}

ssaa_status ssaa_probe_run(const ssaa_model* model, const double* x, size_t n, const char* probe_config_json,
                           char** out_json) {
  if (!model || !x || !out_json) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto j = parse_json(probe_config_json);
    ssaa::ProbeConfig config;
    config.component = j.value("component", std::size_t{0});
    config.target_class = j.value("class", std::size_t{0});
    config.thetas = j.value("thetas", std::vector<double>{1e-4, 1e-3});
    config.trials = j.value("trials", std::size_t{100000});
    const auto noise = j.value("noise", std::string("folded"));
    if (noise == "folded") config.noise = ssaa::ProbeNoise::folded;
    else if (noise == "symmetric") config.noise = ssaa::ProbeNoise::symmetric;
    else throw ssaa::ConfigError("unknown probe noise '" + noise + "' (expected folded or symmetric)");
    ssaa::RngStream rng(j.value("seed", std::uint64_t{0}), j.value("stream", std::uint64_t{0}));
    const auto rows = ssaa::expansion_probe(model->mlp, ssaa::InputVector(std::vector<double>(x, x + n)), config, rng);
    ssaa::Json out;
    out["config"] = j;
    out["version"] = ssaa::kVersion;
    out["probe"] = ssaa::to_json(rows);
    *out_json = duplicate(out.dump(2) + "\n");
  });
}

ssaa_status ssaa_curves(const char* const* report_jsons, size_t count, const char* axis, char** csv) {
  if ((!report_jsons && count) || !axis || !csv) return fail(SSAA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<ssaa::Report> reports;
    for (size_t k = 0; k < count; ++k) {
      require(report_jsons[k] != nullptr, "null report");
      reports.push_back(ssaa::parse_report(report_jsons[k]));
    }
    const auto parsed_axis = ssaa::sweep_axis_from_string(axis);
    *csv = duplicate(ssaa::curves_to_csv(ssaa::emit_curves(reports, parsed_axis), parsed_axis));
  });
}

}  // extern "C"
