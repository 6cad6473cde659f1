#pragma once

#include "ssaa/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ssaa {

/// Differentiable probability model. Implementations must be deterministic and
/// safe for concurrent const use.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t input_size() const = 0;
  virtual std::size_t num_classes() const = 0;

  virtual Probabilities forward(std::span<const double> x) const = 0;
  // Default implementation maps forward over the batch.
  virtual std::vector<Probabilities> forward_batch(std::span<const std::vector<double>> xs) const;
  // Analytic d F_c / d x_i for every component i.
  virtual Gradient grad_class(std::span<const double> x, ClassLabel c) const = 0;
};

ClassLabel label(const Classifier& model, std::span<const double> x);

/// Forwards calls to a shared classifier while counting model propagations:
/// forward, grad_class and label cost 1 each, a batch of B inputs costs B.
class MeteredClassifier {
 public:
  explicit MeteredClassifier(const Classifier& model) : model_(model) {}

  Probabilities forward(std::span<const double> x);
  std::vector<Probabilities> forward_batch(std::span<const std::vector<double>> xs);
  Gradient grad_class(std::span<const double> x, ClassLabel c);
  ClassLabel label(std::span<const double> x);

  const Classifier& model() const { return model_; }
  std::uint64_t mp() const { return mp_; }

 private:
  const Classifier& model_;
  std::uint64_t mp_ = 0;
};

enum class Activation { sigmoid, tanh };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Fully connected network: smooth hidden activations, softmax output.
class ReferenceMLP final : public Classifier {
 public:
  // Zero-initialised weights and biases.
  ReferenceMLP(std::vector<std::size_t> layer_sizes, Activation activation);

  std::size_t input_size() const override { return layer_sizes_.front(); }
  std::size_t num_classes() const override { return layer_sizes_.back(); }

  Probabilities forward(std::span<const double> x) const override;
  std::vector<Probabilities> forward_batch(std::span<const std::vector<double>> xs) const override;
  Gradient grad_class(std::span<const double> x, ClassLabel c) const override;

  Eigen::VectorXd logits(std::span<const double> x) const;

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  Activation activation() const { return activation_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Optional metadata carried through the weight file.
  const Shape& input_shape() const { return input_shape_; }
  void set_input_shape(Shape shape);
  double train_accuracy() const { return train_accuracy_; }
  void set_train_accuracy(double accuracy) { train_accuracy_ = accuracy; }

 private:
  void check_input(std::size_t n) const;

  std::vector<std::size_t> layer_sizes_;
  Activation activation_;
  std::vector<DenseLayer> layers_;
  Shape input_shape_;
  double train_accuracy_ = 0.0;
};

struct TrainConfig {
  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::tanh;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::uint64_t seed = 1;
};

/// Mini-batch SGD with momentum on mean cross-entropy. Weights start from a
/// Glorot-uniform draw of RngStream(seed, 0); epoch shuffles use stream 1.
ReferenceMLP train_reference(const LabeledDataset& dataset, const TrainConfig& config);

double accuracy(const Classifier& model, const LabeledDataset& dataset);

// Weight file: "SSAA-MLP", version byte, JSON header line, then little-endian
// float32 weights (row-major, out x in) followed by biases, layer by layer.
void save_weights(const ReferenceMLP& model, const std::filesystem::path& path);
ReferenceMLP load_weights(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_weights(const ReferenceMLP& model);
ReferenceMLP deserialize_weights(std::span<const std::uint8_t> bytes);

}  // namespace ssaa
