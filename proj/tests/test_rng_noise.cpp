#include "ssaa/error.hpp"
#include "ssaa/noise.hpp"
#include "ssaa/rng.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace ssaa;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};

// Two-pass moments with standard errors for the mean and the variance.
Moments moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double s : v) {
    const double d = s - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  m.var = m2 * n / (n - 1.0);
  m.mean_se = std::sqrt(m2 / n);
  m.var_se = std::sqrt((m4 - m2 * m2) / n);
  return m;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  // Published Random123 test vectors for philox4x32-10.
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, FirstWordsComeFromBlockZero) {
  RngStream rng(0, 0);
  const auto block = philox4x32_10({0, 0, 0, 0}, {0, 0});
  for (auto word : block) EXPECT_EQ(rng.next_u32(), word);
  const auto next = philox4x32_10({1, 0, 0, 0}, {0, 0});
  EXPECT_EQ(rng.next_u32(), next[0]);
}

TEST(RngStream, SameSeedAndStreamReplay) {
  RngStream a(42, 7), b(42, 7);
  for (int k = 0; k < 1000; ++k) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
  RngStream c(42, 7), d(42, 7);
  for (int k = 0; k < 1000; ++k) {
    const double x = c.normal(), y = d.normal();
    ASSERT_EQ(std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y));
  }
}

TEST(RngStream, DistinctStreamsDiffer) {
  for (std::uint64_t s = 0; s < 64; ++s) {
    RngStream a(5, s), b(5, s + 1);
    bool differ = false;
    for (int k = 0; k < 10; ++k) differ |= a.uniform() != b.uniform();
    EXPECT_TRUE(differ) << "streams " << s << " and " << s + 1;
  }
  RngStream a(1, 0), b(2, 0);
  bool differ = false;
  for (int k = 0; k < 10; ++k) differ |= a.uniform() != b.uniform();
  EXPECT_TRUE(differ);
}

TEST(RngStream, UniformRangesAndBelow) {
  RngStream rng(3, 0);
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double o = rng.uniform_open();
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

TEST(RngStream, NormalMoments) {
  RngStream rng(11, 3);
  std::vector<double> v(200000);
  for (auto& s : v) s = rng.normal();
  const auto m = moments(v);
  EXPECT_NEAR(m.mean, 0.0, 3 * m.mean_se);
  EXPECT_NEAR(m.var, 1.0, 3 * m.var_se);
}

TEST(FoldedGaussian, ZeroThetaGivesZeros) {
  RngStream rng(1, 0);
  for (double s : sample_folded_gaussian(0.0, 100, rng)) EXPECT_EQ(s, 0.0);
  for (double s : sample_neg_folded_gaussian(0.0, 100, rng)) EXPECT_EQ(s, 0.0);
  for (double s : sample_uniform(0.0, 100, rng)) EXPECT_EQ(s, 0.0);
}

TEST(FoldedGaussian, NegativeOrNonFiniteThetaRejected) {
  RngStream rng(1, 0);
  EXPECT_THROW(sample_folded_gaussian(-0.1, 3, rng), ParameterError);
  EXPECT_THROW(sample_neg_folded_gaussian(-1.0, 3, rng), ParameterError);
  EXPECT_THROW(sample_uniform(-1e-9, 3, rng), ParameterError);
  EXPECT_THROW(sample_folded_gaussian(std::nan(""), 3, rng), ParameterError);
}

TEST(FoldedGaussian, ZeroCountIsEmpty) {
  RngStream rng(1, 0);
  EXPECT_TRUE(sample_folded_gaussian(1.0, 0, rng).empty());
}

TEST(FoldedGaussian, IsAbsoluteValueOfScaledNormal) {
  RngStream a(8, 1), b(8, 1);
  const double theta = 0.3;
  const auto s = sample_folded_gaussian(theta, 50, a);
  for (double v : s) EXPECT_EQ(v, std::abs(std::sqrt(theta) * b.normal()));
}

TEST(FoldedGaussian, NegatedSamplerMirrorsSampleForSample) {
  RngStream a(4, 2), b(4, 2);
  const auto pos = sample_folded_gaussian(0.7, 500, a);
  const auto neg = sample_neg_folded_gaussian(0.7, 500, b);
  ASSERT_EQ(pos.size(), neg.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    EXPECT_EQ(neg[k], -pos[k]);
    EXPECT_LE(neg[k], 0.0);
  }
}

class FoldedMoments : public ::testing::TestWithParam<double> {};

TEST_P(FoldedMoments, MeanAndVarianceMatchAnalyticValues) {
  const double theta = GetParam();
  RngStream rng(2024, static_cast<std::uint64_t>(theta * 1000));
  const auto v = sample_folded_gaussian(theta, 100000, rng);
  for (double s : v) ASSERT_GE(s, 0.0);
  const auto m = moments(v);
  EXPECT_NEAR(m.mean, std::sqrt(2.0 * theta / std::numbers::pi), 3 * m.mean_se);
  EXPECT_NEAR(m.var, theta * (1.0 - 2.0 / std::numbers::pi), 3 * m.var_se);
}

INSTANTIATE_TEST_SUITE_P(Thetas, FoldedMoments, ::testing::Values(0.01, 0.25, 1.0, std::numbers::pi / 2));

TEST(FoldedGaussian, QuarterVarianceMean) {
  RngStream rng(77, 0);
  const auto m = moments(sample_folded_gaussian(0.25, 100000, rng));
  EXPECT_NEAR(std::sqrt(2.0 * 0.25 / std::numbers::pi), 0.398942, 1e-6);
  EXPECT_NEAR(m.mean, 0.398942, 3 * m.mean_se);
}

TEST(FoldedGaussian, NegatedMeanAtUnitVariance) {
  RngStream rng(78, 0);
  const auto m = moments(sample_neg_folded_gaussian(1.0, 100000, rng));
  EXPECT_NEAR(m.mean, -std::sqrt(2.0 / std::numbers::pi), 3 * m.mean_se);
}

TEST(Uniform, SupportAndMean) {
  for (double theta : {1.0, 0.3}) {
    RngStream rng(9, 0);
    const auto v = sample_uniform(theta, 100000, rng);
    for (double s : v) {
      ASSERT_GE(s, 0.0);
      ASSERT_LE(s, theta);
    }
    const auto m = moments(v);
    EXPECT_NEAR(m.mean, theta / 2.0, 3 * m.mean_se);
  }
}

TEST(Sample, DispatchesOnFamily) {
  RngStream a(1, 1), b(1, 1);
  EXPECT_EQ(sample({NoiseFamily::uniform, 0.4}, 20, a), sample_uniform(0.4, 20, b));
  EXPECT_EQ(sample({NoiseFamily::neg_folded_gaussian, 0.4}, 20, a), sample_neg_folded_gaussian(0.4, 20, b));
  EXPECT_EQ(sample({NoiseFamily::folded_gaussian, 0.4}, 20, a), sample_folded_gaussian(0.4, 20, b));
}

// --- expansion probe ---------------------------------------------------------

TEST(Probe, ZeroGradientComponentGivesNoChange) {
  ReferenceMLP zero({4, 3}, Activation::tanh);
  InputVector x({0.5, 0.5, 0.5, 0.5});
  RngStream rng(1, 0);
  ProbeConfig cfg{.component = 1, .target_class = 0, .thetas = {1e-4, 1e-3}, .trials = 10000};
  for (const auto& row : expansion_probe(zero, x, cfg, rng)) {
    EXPECT_EQ(row.predicted, 0.0);
    EXPECT_NEAR(row.empirical, 0.0, 3 * row.standard_error + 1e-15);
    EXPECT_TRUE(std::isnan(row.ratio));
  }
}

TEST(Probe, DomainIsEnforced) {
  ReferenceMLP zero({2, 2}, Activation::tanh);
  RngStream rng(1, 0);
  ProbeConfig cfg{.component = 0, .target_class = 0, .thetas = {1e-2}, .trials = 10000};
  // 0.7 + 4 * 0.1 > 1
  EXPECT_THROW(expansion_probe(zero, InputVector({0.7, 0.5}), cfg, rng), ProbeDomainError);
  EXPECT_NO_THROW(expansion_probe(zero, InputVector({0.6, 0.5}), cfg, rng));
  cfg.noise = ProbeNoise::symmetric;
  EXPECT_THROW(expansion_probe(zero, InputVector({0.3, 0.5}), cfg, rng), ProbeDomainError);
  cfg.trials = 9999;
  EXPECT_THROW(expansion_probe(zero, InputVector({0.5, 0.5}), cfg, rng), ProbeDomainError);
}

TEST(Probe, EmpiricalMatchesDirectMonteCarlo) {
  // The probe's empirical column equals an independent loop over the same draws.
  const auto m = ssaa::testing::linear_softmax({{2.0, -1.0}, {-1.0, 1.5}}, {0.1, -0.2});
  InputVector x({0.3, 0.4});
  const double theta = 1e-3;
  RngStream rng(5, 0), replay(5, 0);
  ProbeConfig cfg{.component = 0, .target_class = 1, .thetas = {theta}, .trials = 10000};
  const auto rows = expansion_probe(m, x, cfg, rng);
  const double base = m.forward(x.values)[1];
  double sum = 0.0;
  for (int t = 0; t < 10000; ++t) {
    auto y = x.values;
    y[0] += std::abs(std::sqrt(theta) * replay.normal());
    sum += m.forward(y)[1] - base;
  }
  EXPECT_NEAR(rows[0].empirical, sum / 10000, 1e-12);
  EXPECT_NEAR(rows[0].predicted, std::sqrt(2 * theta / std::numbers::pi) * m.grad_class(x.values, 1)[0], 1e-15);
}

TEST(Probe, FirstOrderErrorShrinksLikeTheta) {
  // Strong curvature so the O(theta) remainder is visible above MC noise.
  const auto m = ssaa::testing::linear_softmax({{6.0, 0.0}, {0.0, 0.0}}, {-2.0, 0.0});
  InputVector x({0.5, 0.5});
  RngStream rng(12, 0);
  ProbeConfig cfg{.component = 0, .target_class = 0, .thetas = {1e-4, 1e-3}, .trials = 400000};
  const auto rows = expansion_probe(m, x, cfg, rng);
  const double e_small = std::abs(rows[0].empirical - rows[0].predicted) / std::sqrt(rows[0].theta);
  const double e_large = std::abs(rows[1].empirical - rows[1].predicted) / std::sqrt(rows[1].theta);
  EXPECT_LT(e_small, e_large);
  // Remainder ~ F'' theta / 2, so the scaled error ratio should be near sqrt(10).
  const double ratio = e_large / e_small;
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 6.0);
}

TEST(Probe, SymmetricNoiseCancelsFirstOrderTerm) {
  const auto m = ssaa::testing::linear_softmax({{3.0, -1.0}, {-1.0, 2.0}}, {0.0, 0.0});
  InputVector x({0.5, 0.5});
  ProbeConfig folded{.component = 0, .target_class = 0, .thetas = {1e-3}, .trials = 100000};
  ProbeConfig symmetric = folded;
  symmetric.noise = ProbeNoise::symmetric;
  RngStream r1(3, 0), r2(3, 1);
  const auto f = expansion_probe(m, x, folded, r1);
  const auto s = expansion_probe(m, x, symmetric, r2);
  ASSERT_GT(std::abs(m.grad_class(x.values, 0)[0]), 0.1);
  EXPECT_EQ(s[0].predicted, 0.0);
  EXPECT_LE(5.0 * std::abs(s[0].empirical), std::abs(f[0].empirical));
}
