#include "ssaa/attack.hpp"
#include "ssaa/error.hpp"
#include "ssaa/metrics.hpp"
#include "ssaa/noise.hpp"
#include "oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace ssaa;
using ssaa::testing::linear_softmax;
using ssaa::testing::random_mlp;
using ssaa::testing::random_point;
using namespace ssaa::testing;

namespace {

void expect_matches_oracle(const AttackResult& r, const OracleRun& o, const InputVector& x0) {
  ASSERT_EQ(r.iterations, o.steps.size());
  ASSERT_EQ(r.history.size(), o.steps.size());
  for (std::size_t k = 0; k < o.steps.size(); ++k) {
    const auto& h = r.history[k];
    EXPECT_EQ(h.index, o.steps[k].index) << "iteration " << k;
    EXPECT_EQ(h.direction == Direction::increase, o.steps[k].increased) << "iteration " << k;
    EXPECT_DOUBLE_EQ(h.new_value, o.steps[k].value) << "iteration " << k;
    EXPECT_EQ(h.gamma_size_after, o.steps[k].gamma_after.size());
  }
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_DOUBLE_EQ(r.x_adv.values[i], o.x[i]);
  EXPECT_EQ(r.success, o.success);
}

AttackConfig config(Variant v, Mode mode, std::optional<ClassLabel> target, std::size_t ns, std::uint64_t seed) {
  AttackConfig c;
  c.variant = v;
  c.mode = mode;
  c.target = target;
  c.n_samples = ns;
  c.seed = seed;
  c.record_history = true;
  return c;
}

const Oracle kOracle{{{0.0, 4.0}, {4.0, 0.0}}, {0.0, 0.0}};

}  // namespace

// --- selection ---------------------------------------------------------------

TEST(Select, IncreasingExample) {
  const std::vector<double> x{0.5, 0.9, 0.1}, g{0.2, 1.0, 0.5};
  EXPECT_EQ(select_fga_inc(x, {0, 1, 2}, g), 2u);
}

TEST(Select, DecreasingExample) {
  const std::vector<double> x{0.5, 0.9, 0.1}, g{-0.2, -1.0, 0.3};
  EXPECT_EQ(select_fga_dec(x, {0, 1, 2}, g), 1u);
  EXPECT_EQ(select_fga_dec(std::vector<double>{0.5, 0.5, 0.5}, {0, 1, 2}, std::vector<double>{0.0, -2.0, 0.0}), 1u);
}

TEST(Select, TiesAndSingletons) {
  const std::vector<double> x{0.2, 0.4, 0.6}, zero{0.0, 0.0, 0.0};
  EXPECT_EQ(select_fga_inc(x, {0, 1, 2}, zero), 0u);
  EXPECT_EQ(select_fga_dec(x, {0, 1, 2}, zero), 0u);
  EXPECT_EQ(select_fga_inc(x, {1}, std::vector<double>{5.0, -3.0, 9.0}), 1u);
  EXPECT_EQ(select_fga_inc(x, {1, 2}, zero), 1u);
}

TEST(Select, EmptyGammaThrows) {
  const std::vector<double> x{0.2}, g{1.0};
  EXPECT_THROW(select_fga_inc(x, {}, g), ExhaustedError);
  EXPECT_THROW(select_fga_dec(x, {}, g), ExhaustedError);
  EXPECT_THROW(select_fga_inc(x, {3}, g), RangeError);
}

TEST(Select, MatchesBruteForceScan) {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    auto x = random_point(n, rng);
    std::vector<double> g(n);
    for (auto& v : g) v = rng.uniform() - 0.5;
    if (trial % 5 == 0) g.assign(n, 0.25);  // force ties
    IndexSet gamma;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.7) gamma.push_back(i);
    }
    if (gamma.empty()) continue;
    for (auto dir : {Direction::increase, Direction::decrease}) {
      for (auto ext : {Extremum::max, Extremum::min}) {
        std::size_t expect = gamma[0];
        double best = 0.0;
        bool first = true;
        for (std::size_t i : gamma) {
          const double s = (dir == Direction::increase ? 1.0 - x[i] : x[i]) * g[i];
          if (first || (ext == Extremum::max ? s > best : s < best)) {
            expect = i;
            best = s;
            first = false;
          }
        }
        EXPECT_EQ(select_component(x, gamma, g, dir, ext), expect);
      }
    }
  }
}

// --- candidates ----------------------------------------------------------------

TEST(Candidates, ZeroSamplesCopyInput) {
  const std::vector<double> x{0.3, 0.5};
  const auto c = make_candidates(x, 1, std::vector<double>{0.0, 0.0, 0.0});
  ASSERT_EQ(c.size(), 3u);
  for (const auto& y : c) EXPECT_EQ(y, x);
}

TEST(Candidates, ClipAndArithmetic) {
  EXPECT_EQ(make_candidates(std::vector<double>{0.9}, 0, std::vector<double>{0.5})[0][0], 1.0);
  const auto c = make_candidates(std::vector<double>{0.2, 0.3}, 1, std::vector<double>{0.1, 0.9});
  EXPECT_DOUBLE_EQ(c[0][1], 0.4);
  EXPECT_EQ(c[1][1], 1.0);
  EXPECT_EQ(c[0][0], 0.2);
  EXPECT_EQ(make_candidates(std::vector<double>{0.2}, 0, std::vector<double>{-0.7})[0][0], 0.0);
  EXPECT_THROW(make_candidates(std::vector<double>{0.2}, 1, std::vector<double>{0.1}), RangeError);
}

TEST(PickBest, MatchesExhaustiveScan) {
  const auto m = random_mlp({6, 5, 3}, Activation::tanh, 8, 2.0);
  RngStream rng(2, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> cands;
    const std::size_t count = 1 + rng.below(15);
    for (std::size_t h = 0; h < count; ++h) cands.push_back(random_point(6, rng));
    const ClassLabel c = rng.below(3);
    for (auto mode : {Mode::targeted, Mode::untargeted}) {
      MeteredClassifier meter(m);
      const auto best = pick_best(meter, cands, c, mode);
      EXPECT_EQ(meter.mp(), count);
      std::size_t expect = 0;
      for (std::size_t h = 1; h < count; ++h) {
        const double fh = m.forward(cands[h])[c], fe = m.forward(cands[expect])[c];
        if (mode == Mode::targeted ? fh > fe : fh < fe) expect = h;
      }
      EXPECT_EQ(best.index, expect);
      EXPECT_DOUBLE_EQ(best.objective, m.forward(cands[expect])[c]);
      EXPECT_EQ(best.scores.size(), count);
    }
  }
}

TEST(PickBest, IdenticalCandidatesPickFirst) {
  const auto m = random_mlp({2, 2}, Activation::tanh, 1);
  MeteredClassifier meter(m);
  const std::vector<std::vector<double>> same(4, std::vector<double>{0.3, 0.3});
  EXPECT_EQ(pick_best(meter, same, 0, Mode::targeted).index, 0u);
  EXPECT_EQ(pick_best(meter, same, 0, Mode::untargeted).index, 0u);
  const std::vector<std::vector<double>> one(1, std::vector<double>{0.3, 0.3});
  EXPECT_EQ(pick_best(meter, one, 1, Mode::targeted).index, 0u);
}

TEST(Gamma, DirectionAwareInitialisation) {
  const std::vector<double> x{0.0, 1.0, 0.5, 1.0, 0.0};
  EXPECT_EQ(initial_gamma(x, Variant::fga_inc), (IndexSet{0, 2, 4}));
  EXPECT_EQ(initial_gamma(x, Variant::ua), (IndexSet{0, 2, 4}));
  EXPECT_EQ(initial_gamma(x, Variant::vfga), (IndexSet{0, 2, 4}));
  EXPECT_EQ(initial_gamma(x, Variant::fga_dec), (IndexSet{1, 2, 3}));
}

// --- hand simulation ---------------------------------------------------------------

TEST(HandSimulation, TargetedFgaMatchesOracle) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (std::size_t ns : {1u, 3u}) {
      const InputVector x({0.3, 0.6});
      for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua}) {
        const auto r = run_fga(m, x, config(v, Mode::targeted, 1, ns, seed));
        expect_matches_oracle(r, simulate(kOracle, x.values, v, true, 1, ns, seed, 0), x);
      }
    }
  }
}

TEST(HandSimulation, UntargetedFgaMatchesOracle) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const InputVector x({0.2, 0.7});
    for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua}) {
      const auto r = run_fga(m, x, config(v, Mode::untargeted, std::nullopt, 1, seed));
      expect_matches_oracle(r, simulate(kOracle, x.values, v, false, 0, 1, seed, 0), x);
    }
  }
}

TEST(HandSimulation, VfgaMatchesOracle) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  std::size_t decreases = 0, increases = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (const auto& xv : {std::vector<double>{0.3, 0.6}, std::vector<double>{0.4, 0.65}}) {
      const InputVector x(xv);
      const auto t = run_vfga(m, x, config(Variant::vfga, Mode::targeted, 1, 1, seed));
      const auto ot = simulate(kOracle, xv, Variant::vfga, true, 1, 1, seed, 0);
      expect_matches_oracle(t, ot, x);
      const auto u = run_vfga(m, x, config(Variant::vfga, Mode::untargeted, std::nullopt, 1, seed));
      expect_matches_oracle(u, simulate(kOracle, xv, Variant::vfga, false, 0, 1, seed, 0), x);
      for (const auto& s : ot.steps) (s.increased ? increases : decreases)++;
    }
  }
  // Both move types occur, so the removed index really depends on the vote.
  EXPECT_GT(increases, 0u);
  EXPECT_GT(decreases, 0u);
}

TEST(HandSimulation, ExplicitTwoStepTrace) {
  // x = (0.3, 0.6): z0 = 2.4, z1 = 1.2, so the label is 0 and the target is 1.
  // dF1/dx = F0 F1 (4, -4): increasing moves pick component 0, decreasing
  // moves pick component 1.
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  const InputVector x({0.3, 0.6});
  const auto r = run_fga(m, x, config(Variant::fga_inc, Mode::targeted, 1, 1, 5));
  RngStream rng(5, 0);
  const double v0 = std::min(1.0, 0.3 + std::abs(0.7 * rng.normal()));
  ASSERT_GE(r.iterations, 1u);
  EXPECT_EQ(r.history[0].index, 0u);
  EXPECT_DOUBLE_EQ(r.history[0].theta, 0.7 * 0.7);
  EXPECT_DOUBLE_EQ(r.x_adv.values[0], v0);
  // Target reached iff 4 v0 > 2.4; otherwise component 1 is the only one left.
  if (4.0 * v0 > 2.4) {
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_TRUE(r.success);
  } else {
    EXPECT_EQ(r.iterations, 2u);
    EXPECT_EQ(r.history[1].index, 1u);
  }
  EXPECT_EQ(r.mp, 1 + r.iterations * (1 + 1 + 1));
}

// --- loop contract ---------------------------------------------------------------

TEST(Attack, AlreadyAtTargetSucceedsImmediately) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  const InputVector x({0.9, 0.1});  // predicted class 1
  for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua, Variant::vfga}) {
    const auto r = run_attack(m, x, config(v, Mode::targeted, 1, 10, 0), ClassLabel{0});
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.l0_components, 0u);
    EXPECT_EQ(r.mp, 1u);
    EXPECT_EQ(r.original_label, 0u);
  }
}

TEST(Attack, TargetEqualToOriginalIsConfigError) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  const InputVector x({0.3, 0.6});
  EXPECT_THROW(run_fga(m, x, config(Variant::fga_inc, Mode::targeted, 0, 1, 0)), ConfigError);
  EXPECT_THROW(run_vfga(m, x, config(Variant::vfga, Mode::targeted, 0, 1, 0)), ConfigError);
  EXPECT_THROW(run_fga(m, x, config(Variant::fga_inc, Mode::targeted, std::nullopt, 1, 0)), ConfigError);
  EXPECT_THROW(run_fga(m, x, config(Variant::fga_inc, Mode::untargeted, 1, 1, 0)), ConfigError);
  EXPECT_THROW(run_fga(m, x, config(Variant::fga_inc, Mode::targeted, 5, 1, 0)), RangeError);
  EXPECT_THROW(run_fga(m, x, config(Variant::fga_inc, Mode::untargeted, std::nullopt, 0, 0)), ConfigError);
  auto zero_iter = config(Variant::fga_inc, Mode::untargeted, std::nullopt, 1, 0);
  zero_iter.max_iter = 0;
  EXPECT_THROW(run_fga(m, x, zero_iter), ConfigError);
  EXPECT_THROW(run_fga(m, InputVector({0.3}), config(Variant::fga_inc, Mode::untargeted, std::nullopt, 1, 0)),
               DimensionError);
  EXPECT_THROW(run_fga(m, x, config(Variant::vfga, Mode::untargeted, std::nullopt, 1, 0)), ConfigError);
}

TEST(Attack, EmptyGammaFailsWithoutIterating) {
  const auto m = linear_softmax(kOracle.w, kOracle.b);
  const auto r = run_fga(m, InputVector({1.0, 1.0}), config(Variant::fga_inc, Mode::targeted, 1, 3, 0));
  // (1, 1) ties at class 0.
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.gamma_initial, 0u);
  const auto d = run_fga(m, InputVector({0.0, 0.0}), config(Variant::fga_dec, Mode::targeted, 1, 3, 0));
  EXPECT_EQ(d.iterations, 0u);
  EXPECT_FALSE(d.success);
}

TEST(Attack, ZeroDisplacementWinnerStillConsumesIndex) {
  // Raising either feature lowers F_1, so at x = 0 the unchanged decrease
  // candidates (theta = 0) win each vote.
  const auto m = linear_softmax({{1.0, 1.0}, {0.0, 0.0}}, {0.0, 0.0});
  const auto r = run_vfga(m, InputVector({0.0, 0.0}), config(Variant::vfga, Mode::targeted, 1, 2, 0));
  EXPECT_EQ(r.iterations, 2u);
  EXPECT_EQ(r.l0_components, 0u);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.history[0].index, 0u);
  EXPECT_EQ(r.history[0].direction, Direction::decrease);
  EXPECT_EQ(r.history[1].index, 1u);
}

TEST(Attack, MaxIterCapsTheLoop) {
  const auto m = random_mlp({20, 3}, Activation::tanh, 3, 0.05);
  RngStream rng(1, 0);
  const InputVector x(random_point(20, rng, 0.1, 0.9));
  auto cfg = config(Variant::fga_inc, Mode::untargeted, std::nullopt, 2, 0);
  cfg.max_iter = 3;
  const auto r = run_fga(m, x, cfg);
  EXPECT_LE(r.iterations, 3u);
}

TEST(Attack, ModelPropagationAccounting) {
  const auto m = random_mlp({12, 8, 3}, Activation::tanh, 21, 2.0);
  RngStream rng(6, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const InputVector x(random_point(12, rng));
    const std::size_t ns = 1 + trial % 5;
    for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua, Variant::vfga}) {
      const auto r = run_attack(m, x, config(v, Mode::untargeted, std::nullopt, ns, trial));
      const std::size_t per_iter = 2 + (v == Variant::vfga ? 2 * ns : ns);
      EXPECT_EQ(r.mp, 1 + r.iterations * per_iter);
      std::uint64_t from_trace = 1;
      for (const auto& h : r.history) from_trace += 2 + h.candidate_scores.size();
      EXPECT_EQ(r.mp, from_trace);
    }
  }
}

TEST(Attack, VfgaCandidatesAreUnionOfBothDirections) {
  const auto m = random_mlp({8, 6, 3}, Activation::tanh, 2, 2.0);
  RngStream rng(3, 0);
  const InputVector x(random_point(8, rng, 0.05, 0.95));
  auto cfg = config(Variant::vfga, Mode::untargeted, std::nullopt, 4, 11);
  cfg.max_iter = 1;
  const auto r = run_vfga(m, x, cfg);
  ASSERT_EQ(r.history.size(), 1u);
  const auto& h = r.history[0];
  // Rebuild the candidate set from the same state and stream.
  RngStream replay(11, 0);
  const double tp = (1 - x.values[h.index_increase]) * (1 - x.values[h.index_increase]);
  const double tm = x.values[h.index_decrease] * x.values[h.index_decrease];
  const auto up = sample_folded_gaussian(tp, 4, replay);
  const auto down = sample_neg_folded_gaussian(tm, 4, replay);
  auto cands = make_candidates(x.values, h.index_increase, up);
  const auto low = make_candidates(x.values, h.index_decrease, down);
  cands.insert(cands.end(), low.begin(), low.end());
  ASSERT_EQ(h.candidate_scores.size(), 8u);
  const ClassLabel c = r.original_label;
  for (std::size_t k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(h.candidate_scores[k], m.forward(cands[k])[c]);
  EXPECT_EQ(r.x_adv.values, cands[h.best_candidate]);
}

TEST(Attack, UntargetedSuccessMeansLabelChange) {
  const auto m = random_mlp({10, 8, 4}, Activation::tanh, 4, 2.0);
  RngStream rng(8, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const InputVector x(random_point(10, rng));
    for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua, Variant::vfga}) {
      const auto r = run_attack(m, x, config(v, Mode::untargeted, std::nullopt, 5, trial));
      EXPECT_EQ(r.success, label(m, r.x_adv.values) != label(m, x.values));
      EXPECT_EQ(r.final_label, label(m, r.x_adv.values));
    }
  }
}

TEST(Attack, DeterministicGivenConfig) {
  const auto m = random_mlp({16, 8, 3}, Activation::sigmoid, 9, 3.0);
  RngStream rng(10, 0);
  const InputVector x(random_point(16, rng));
  for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::ua, Variant::vfga}) {
    const auto a = run_attack(m, x, config(v, Mode::untargeted, std::nullopt, 7, 123));
    const auto b = run_attack(m, x, config(v, Mode::untargeted, std::nullopt, 7, 123));
    EXPECT_EQ(a.x_adv.values, b.x_adv.values);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.mp, b.mp);
    EXPECT_EQ(a.final_label, b.final_label);
  }
}

TEST(Attack, VariantNamesRoundTrip) {
  for (auto v : {Variant::fga_inc, Variant::fga_dec, Variant::vfga, Variant::ua}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_EQ(variant_from_string("fga"), Variant::fga_inc);
  EXPECT_THROW(variant_from_string("jsma"), ConfigError);
  EXPECT_EQ(mode_from_string("targeted"), Mode::targeted);
  EXPECT_THROW(mode_from_string("both"), ConfigError);
}
