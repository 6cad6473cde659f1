#include "ssaa/types.hpp"

#include "ssaa/error.hpp"

#include <functional>
#include <numeric>

namespace ssaa {

std::size_t Shape::size() const {
  if (dims.empty()) return 0;
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.dims.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape.dims[i]);
  }
  return out + ")";
}

InputVector::InputVector(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {}

InputVector::InputVector(std::vector<double> v) : shape(Shape::flat(v.size())), values(std::move(v)) {}

void InputVector::validate() const {
  if (shape.size() != values.size()) {
    throw DimensionError("input shape " + to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw RangeError("input component " + std::to_string(i) + " = " + std::to_string(values[i]) +
                       " lies outside [0, 1]");
    }
  }
}

void LabeledDataset::validate() const {
  if (inputs.size() != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    inputs[k].validate();
    if (inputs[k].size() != input_size()) {
      throw DimensionError("dataset input " + std::to_string(k) + " has inconsistent length");
    }
    if (labels[k] >= num_classes) {
      throw RangeError("dataset label " + std::to_string(labels[k]) + " at index " + std::to_string(k) +
                       " exceeds class count " + std::to_string(num_classes));
    }
  }
}

ClassLabel argmax_label(std::span<const double> probs) {
  ClassLabel best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

}  // namespace ssaa
