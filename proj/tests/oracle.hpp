#pragma once

#include "ssaa/attack.hpp"
#include "ssaa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace ssaa::testing {

// Hand simulation of the attack loop on a 2-class linear softmax, written
// directly from the algorithm statement with closed-form probabilities and
// gradients. It shares only the random stream definition with the library.
struct Oracle {
  std::vector<std::vector<double>> w;
  std::vector<double> b;

  std::vector<double> probs(const std::vector<double>& x) const {
    double z[2];
    for (int k = 0; k < 2; ++k) {
      z[k] = b[k];
      for (std::size_t i = 0; i < x.size(); ++i) z[k] += w[k][i] * x[i];
    }
    const double p1 = 1.0 / (1.0 + std::exp(z[0] - z[1]));
    return {1.0 - p1, p1};
  }
  std::size_t label(const std::vector<double>& x) const {
    const auto p = probs(x);
    return p[1] > p[0] ? 1 : 0;
  }
  std::vector<double> grad(const std::vector<double>& x, std::size_t c) const {
    const auto p = probs(x);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = p[c] * (w[c][i] - p[0] * w[0][i] - p[1] * w[1][i]);
    return g;
  }
};

struct OracleStep {
  std::size_t index;
  bool increased;
  double value;
  std::vector<std::size_t> gamma_after;
};

struct OracleRun {
  std::vector<OracleStep> steps;
  std::vector<double> x;
  bool success;
};

inline std::size_t extreme(const std::vector<std::size_t>& gamma, const std::vector<double>& score, bool want_max) {
  std::size_t best = gamma[0];
  for (std::size_t i : gamma) {
    if (want_max ? score[i] > score[best] : score[i] < score[best]) best = i;
  }
  return best;
}

inline OracleRun simulate(const Oracle& o, std::vector<double> x, Variant variant, bool targeted, std::size_t target,
                   std::size_t ns, std::uint64_t seed, std::uint64_t stream) {
  const std::size_t original = o.label(x);
  const std::size_t c = targeted ? target : original;
  auto done = [&](const std::vector<double>& y) { return targeted ? o.label(y) == target : o.label(y) != original; };

  std::vector<std::size_t> gamma;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (variant == Variant::fga_dec ? x[i] != 0.0 : x[i] != 1.0) gamma.push_back(i);
  }
  RngStream rng(seed, stream);
  OracleRun run;
  std::size_t iter = 0;
  while (!gamma.empty() && !done(x) && iter < x.size()) {
    const auto g = o.grad(x, c);
    std::vector<double> inc_score(x.size()), dec_score(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      inc_score[i] = (1.0 - x[i]) * g[i];
      dec_score[i] = x[i] * g[i];
    }
    // Candidates as (component, new value).
    std::vector<std::pair<std::size_t, double>> cand;
    if (variant == Variant::vfga) {
      const std::size_t ip = extreme(gamma, inc_score, targeted);
      const std::size_t im = extreme(gamma, dec_score, !targeted);
      const double sp = 1.0 - x[ip], sm = x[im];
      for (std::size_t h = 0; h < ns; ++h) cand.push_back({ip, std::min(1.0, x[ip] + std::abs(sp * rng.normal()))});
      for (std::size_t h = 0; h < ns; ++h) cand.push_back({im, std::max(0.0, x[im] - std::abs(sm * rng.normal()))});
    } else if (variant == Variant::fga_dec) {
      const std::size_t i0 = extreme(gamma, dec_score, !targeted);
      for (std::size_t h = 0; h < ns; ++h) cand.push_back({i0, std::max(0.0, x[i0] - std::abs(x[i0] * rng.normal()))});
    } else {
      const std::size_t i0 = extreme(gamma, inc_score, targeted);
      const double head = 1.0 - x[i0];
      for (std::size_t h = 0; h < ns; ++h) {
        const double s = variant == Variant::ua ? head * rng.uniform() : std::abs(head * rng.normal());
        cand.push_back({i0, std::min(1.0, x[i0] + s)});
      }
    }
    std::size_t best = 0;
    double best_f = 0.0;
    for (std::size_t h = 0; h < cand.size(); ++h) {
      auto y = x;
      y[cand[h].first] = cand[h].second;
      const double f = o.probs(y)[c];
      if (h == 0 || (targeted ? f > best_f : f < best_f)) {
        best = h;
        best_f = f;
      }
    }
    const auto [i0, v] = cand[best];
    x[i0] = v;
    gamma.erase(std::find(gamma.begin(), gamma.end(), i0));
    run.steps.push_back({i0, variant == Variant::vfga ? best < ns : variant != Variant::fga_dec, v, gamma});
    ++iter;
  }
  run.x = x;
  run.success = done(x);
  return run;
}

}  // namespace ssaa::testing
