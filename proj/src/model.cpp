#include "ssaa/model.hpp"

#include "ssaa/error.hpp"
#include "ssaa/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

namespace ssaa {
namespace {

constexpr char kMagic[8] = {'S', 'S', 'A', 'A', '-', 'M', 'L', 'P'};
constexpr std::uint8_t kFormatVersion = 1;

double activate(Activation act, double v) {
  return act == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-v)) : std::tanh(v);
}

// Derivative expressed through the activation output.
double activate_slope(Activation act, double out) {
  return act == Activation::sigmoid ? out * (1.0 - out) : 1.0 - out * out;
}

void activate_inplace(Activation act, Eigen::Ref<Eigen::MatrixXd> m) {
  m = m.unaryExpr([act](double v) { return activate(act, v); });
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto col = z.col(j);
    col = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
}

Probabilities to_probs(const Eigen::VectorXd& v) { return Probabilities(v.data(), v.data() + v.size()); }

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

std::vector<Probabilities> Classifier::forward_batch(std::span<const std::vector<double>> xs) const {
  std::vector<Probabilities> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(x));
  return out;
}

ClassLabel label(const Classifier& model, std::span<const double> x) { return argmax_label(model.forward(x)); }

Probabilities MeteredClassifier::forward(std::span<const double> x) {
  ++mp_;
  return model_.forward(x);
}

std::vector<Probabilities> MeteredClassifier::forward_batch(std::span<const std::vector<double>> xs) {
  mp_ += xs.size();
  if (xs.empty()) return {};
  return model_.forward_batch(xs);
}

Gradient MeteredClassifier::grad_class(std::span<const double> x, ClassLabel c) {
  ++mp_;
  return model_.grad_class(x, c);
}

ClassLabel MeteredClassifier::label(std::span<const double> x) {
  ++mp_;
  return ssaa::label(model_, x);
}

std::string to_string(Activation activation) {
  return activation == Activation::sigmoid ? "sigmoid" : "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "' (expected sigmoid or tanh)");
}

ReferenceMLP::ReferenceMLP(std::vector<std::size_t> layer_sizes, Activation activation)
    : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
  if (layer_sizes_.size() < 2) throw DimensionError("an MLP needs at least input and output layer sizes");
  for (std::size_t s : layer_sizes_) {
    if (s == 0) throw DimensionError("layer sizes must be positive");
  }
  for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(layer_sizes_[l]);
    const auto in = static_cast<Eigen::Index>(layer_sizes_[l - 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  input_shape_ = Shape::flat(layer_sizes_.front());
}

void ReferenceMLP::set_input_shape(Shape shape) {
  if (shape.size() != input_size()) {
    throw DimensionError("input shape " + to_string(shape) + " does not match input size " +
                         std::to_string(input_size()));
  }
  input_shape_ = std::move(shape);
}

void ReferenceMLP::check_input(std::size_t n) const {
  if (n != input_size()) {
    throw DimensionError("model expects " + std::to_string(input_size()) + " input components, got " +
                         std::to_string(n));
  }
}

Eigen::VectorXd ReferenceMLP::logits(std::span<const double> x) const {
  check_input(x.size());
  Eigen::VectorXd a = as_vector(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
    if (l + 1 < layers_.size()) activate_inplace(activation_, z);
    a = std::move(z);
  }
  return a;
}

Probabilities ReferenceMLP::forward(std::span<const double> x) const { return to_probs(softmax(logits(x))); }

std::vector<Probabilities> ReferenceMLP::forward_batch(std::span<const std::vector<double>> xs) const {
  if (xs.empty()) return {};
  Eigen::MatrixXd a(static_cast<Eigen::Index>(input_size()), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    check_input(xs[j].size());
    a.col(static_cast<Eigen::Index>(j)) = as_vector(xs[j]);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) activate_inplace(activation_, z);
    a = std::move(z);
  }
  softmax_columns(a);
  std::vector<Probabilities> out;
  out.reserve(xs.size());
  for (Eigen::Index j = 0; j < a.cols(); ++j) out.push_back(to_probs(a.col(j)));
  return out;
}

Gradient ReferenceMLP::grad_class(std::span<const double> x, ClassLabel c) const {
  check_input(x.size());
  if (c >= num_classes()) {
    throw RangeError("class " + std::to_string(c) + " out of range for " + std::to_string(num_classes()) +
                     " classes");
  }
  // Keep every hidden activation for the backward pass.
  std::vector<Eigen::VectorXd> acts;
  acts.reserve(layers_.size());
  acts.emplace_back(as_vector(x));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * acts.back() + layers_[l].bias;
    activate_inplace(activation_, z);
    acts.push_back(std::move(z));
  }
  const Eigen::VectorXd p = softmax(layers_.back().weights * acts.back() + layers_.back().bias);

  // dF_c/dz_k = F_c (delta_ck - F_k)
  Eigen::VectorXd delta = -p[static_cast<Eigen::Index>(c)] * p;
  delta[static_cast<Eigen::Index>(c)] += p[static_cast<Eigen::Index>(c)];

  Eigen::VectorXd upstream = layers_.back().weights.transpose() * delta;
  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    const Eigen::VectorXd& out = acts[l + 1];
    const Eigen::VectorXd local =
        upstream.cwiseProduct(out.unaryExpr([this](double v) { return activate_slope(activation_, v); }));
    upstream = layers_[l].weights.transpose() * local;
  }
  return Gradient(upstream.data(), upstream.data() + upstream.size());
}

ReferenceMLP train_reference(const LabeledDataset& dataset, const TrainConfig& config) {
  if (dataset.size() == 0) throw ConfigError("cannot train on an empty dataset");
  dataset.validate();
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");

  std::vector<std::size_t> sizes{dataset.input_size()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(dataset.num_classes);
  ReferenceMLP model(sizes, config.activation);
  if (dataset.inputs.front().shape.size() == dataset.input_size()) {
    model.set_input_shape(dataset.inputs.front().shape);
  }

  RngStream init_rng(config.seed, 0);
  for (auto& layer : model.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        layer.weights(i, j) = (2.0 * init_rng.uniform() - 1.0) * bound;
      }
    }
  }

  auto& layers = model.layers();
  std::vector<DenseLayer> velocity;
  for (const auto& layer : layers) {
    velocity.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }

  const auto n = static_cast<Eigen::Index>(dataset.input_size());
  const auto classes = static_cast<Eigen::Index>(dataset.num_classes);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream shuffle_rng(config.seed, 1);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const auto batch = static_cast<Eigen::Index>(stop - start);

      std::vector<Eigen::MatrixXd> acts;
      acts.emplace_back(n, batch);
      Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(classes, batch);
      for (Eigen::Index j = 0; j < batch; ++j) {
        const std::size_t idx = order[start + static_cast<std::size_t>(j)];
        acts[0].col(j) = as_vector(dataset.inputs[idx].values);
        targets(static_cast<Eigen::Index>(dataset.labels[idx]), j) = 1.0;
      }
      for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z = layers[l].weights * acts.back();
        z.colwise() += layers[l].bias;
        if (l + 1 < layers.size()) {
          activate_inplace(config.activation, z);
        } else {
          softmax_columns(z);
        }
        acts.push_back(std::move(z));
      }
      const Eigen::MatrixXd& probs = acts.back();
      epoch_loss -= (probs.array().max(1e-300).log() * targets.array()).sum();

      Eigen::MatrixXd delta = (probs - targets) / static_cast<double>(batch);
      for (std::size_t l = layers.size(); l-- > 0;) {
        const Eigen::MatrixXd grad_w = delta * acts[l].transpose();
        const Eigen::VectorXd grad_b = delta.rowwise().sum();
        if (l > 0) {
          Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
          const auto slope = acts[l].unaryExpr([&](double v) { return activate_slope(config.activation, v); });
          delta = back.cwiseProduct(slope);
        }
        velocity[l].weights = config.momentum * velocity[l].weights - config.learning_rate * grad_w;
        velocity[l].bias = config.momentum * velocity[l].bias - config.learning_rate * grad_b;
        layers[l].weights += velocity[l].weights;
        layers[l].bias += velocity[l].bias;
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergence(epoch, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    }
  }
  model.set_train_accuracy(accuracy(model, dataset));
  return model;
}

double accuracy(const Classifier& model, const LabeledDataset& dataset) {
  if (dataset.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    if (label(model, dataset.inputs[k].values) == dataset.labels[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

namespace {

std::size_t payload_floats(const std::vector<std::size_t>& sizes) {
  std::size_t total = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) total += sizes[l] * sizes[l - 1] + sizes[l];
  return total;
}

void put_f32(std::vector<std::uint8_t>& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

double get_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const ReferenceMLP& model) {
  const std::size_t payload_bytes = 4 * payload_floats(model.layer_sizes());
  nlohmann::ordered_json header;
  header["layer_sizes"] = model.layer_sizes();
  header["activation"] = to_string(model.activation());
  header["classes"] = model.num_classes();
  header["payload_bytes"] = payload_bytes;
  header["input_shape"] = model.input_shape().dims;
  header["train_accuracy"] = model.train_accuracy();
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kFormatVersion);
  out.insert(out.end(), text.begin(), text.end());
  out.push_back('\n');
  out.reserve(out.size() + payload_bytes);
  for (const auto& layer : model.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) put_f32(out, layer.weights(i, j));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f32(out, layer.bias[i]);
  }
  return out;
}

ReferenceMLP deserialize_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 1 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("weight file: bad magic header (expected \"SSAA-MLP\")");
  }
  if (bytes[sizeof(kMagic)] != kFormatVersion) {
    throw FormatError("weight file: unsupported version " + std::to_string(bytes[sizeof(kMagic)]));
  }
  const auto header_begin = bytes.begin() + sizeof(kMagic) + 1;
  const auto newline = std::find(header_begin, bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) throw FormatError("weight file: header is not newline-terminated (truncated file?)");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_begin, newline);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: header is not valid JSON: ") + e.what());
  }

  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!header.contains(name)) throw FormatError(std::string("weight file: missing header field '") + name + "'");
    return header.at(name);
  };

  std::vector<std::size_t> sizes;
  std::size_t classes = 0;
  std::size_t payload_bytes = 0;
  Activation activation;
  try {
    sizes = field("layer_sizes").get<std::vector<std::size_t>>();
    classes = field("classes").get<std::size_t>();
    payload_bytes = field("payload_bytes").get<std::size_t>();
    activation = activation_from_string(field("activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: malformed header field: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("weight file: field 'activation': ") + e.what());
  }
  if (sizes.size() < 2 || std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw FormatError("weight file: field 'layer_sizes' must hold at least two positive sizes");
  }
  if (classes != sizes.back()) {
    throw FormatError("weight file: field 'classes' (" + std::to_string(classes) +
                      ") disagrees with the last layer size (" + std::to_string(sizes.back()) + ")");
  }
  if (payload_bytes != 4 * payload_floats(sizes)) {
    throw FormatError("weight file: field 'payload_bytes' (" + std::to_string(payload_bytes) +
                      ") disagrees with 'layer_sizes' (expects " + std::to_string(4 * payload_floats(sizes)) + ")");
  }
  const auto available = static_cast<std::size_t>(bytes.end() - (newline + 1));
  if (available != payload_bytes) {
    throw FormatError("weight file: payload holds " + std::to_string(available) + " bytes, header field " +
                      "'payload_bytes' promises " + std::to_string(payload_bytes));
  }

  ReferenceMLP model(sizes, activation);
  const std::uint8_t* p = &*(newline + 1);
  for (auto& layer : model.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j, p += 4) layer.weights(i, j) = get_f32(p);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i, p += 4) layer.bias[i] = get_f32(p);
  }
  if (header.contains("input_shape")) {
    try {
      model.set_input_shape(Shape{header.at("input_shape").get<std::vector<std::size_t>>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("weight file: malformed field 'input_shape': ") + e.what());
    } catch (const DimensionError& e) {
      throw FormatError(std::string("weight file: field 'input_shape': ") + e.what());
    }
  }
  if (header.contains("train_accuracy") && header.at("train_accuracy").is_number()) {
    model.set_train_accuracy(header.at("train_accuracy").get<double>());
  }
  return model;
}

void save_weights(const ReferenceMLP& model, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ReferenceMLP load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

}  // namespace ssaa
