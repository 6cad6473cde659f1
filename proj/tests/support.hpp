#pragma once

#include "ssaa/model.hpp"
#include "ssaa/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace ssaa::testing {

// Single-layer softmax model with the given weights (rows = classes) and biases.
inline ReferenceMLP linear_softmax(const std::vector<std::vector<double>>& w, const std::vector<double>& b) {
  ReferenceMLP m({w.front().size(), w.size()}, Activation::tanh);
  auto& layer = m.layers().front();
  for (std::size_t r = 0; r < w.size(); ++r) {
    for (std::size_t c = 0; c < w[r].size(); ++c) layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c];
    layer.bias(static_cast<Eigen::Index>(r)) = b[r];
  }
  return m;
}

// MLP with weights drawn uniformly from [-scale, scale].
inline ReferenceMLP random_mlp(std::vector<std::size_t> sizes, Activation act, std::uint64_t seed, double scale = 1.0) {
  ReferenceMLP m(std::move(sizes), act);
  RngStream rng(seed, 99);
  for (auto& layer : m.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.5 * scale * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

inline std::vector<double> random_point(std::size_t n, RngStream& rng, double lo = 0.0, double hi = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = lo + (hi - lo) * rng.uniform();
  return x;
}

// Central finite difference of F_c along every component.
inline std::vector<double> finite_difference(const Classifier& m, std::vector<double> x, std::size_t c, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = m.forward(x)[c];
    x[i] = keep - h;
    const double down = m.forward(x)[c];
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (std::abs(analytic[i]) <= floor) continue;
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / std::abs(analytic[i]));
  }
  return worst;
}

}  // namespace ssaa::testing
