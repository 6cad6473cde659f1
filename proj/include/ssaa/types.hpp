#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ssaa {

using ClassLabel = std::size_t;
using Probabilities = std::vector<double>;
using Gradient = std::vector<double>;

// Either flat (n) or channel-major image (channels, height, width).
struct Shape {
  std::vector<std::size_t> dims;

  static Shape flat(std::size_t n) { return Shape{{n}}; }
  static Shape image(std::size_t channels, std::size_t height, std::size_t width) {
    return Shape{{channels, height, width}};
  }

  std::size_t size() const;
  bool is_image() const { return dims.size() == 3; }
  std::size_t channels() const { return is_image() ? dims[0] : 1; }
  std::size_t pixels() const { return is_image() ? dims[1] * dims[2] : size(); }

  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// Flat feature vector with values in [0, 1]. Image data is stored channel-major:
// element (c, h, w) lives at c * H * W + h * W + w.
struct InputVector {
  Shape shape;
  std::vector<double> values;

  InputVector() = default;
  InputVector(Shape s, std::vector<double> v);
  explicit InputVector(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::span<const double> view() const { return values; }

  // Throws DimensionError / RangeError when the invariants do not hold.
  void validate() const;
};

struct LabeledDataset {
  std::vector<InputVector> inputs;
  std::vector<ClassLabel> labels;
  std::size_t num_classes = 0;
  std::string provenance;

  std::size_t size() const { return inputs.size(); }
  std::size_t input_size() const { return inputs.empty() ? 0 : inputs.front().size(); }
  void validate() const;
};

// Index of the largest entry; ties resolve to the lowest index.
ClassLabel argmax_label(std::span<const double> probs);

}  // namespace ssaa
