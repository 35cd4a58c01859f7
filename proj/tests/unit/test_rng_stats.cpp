#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "apfx/rng.hpp"
#include "apfx/stats.hpp"
#include "test_support.hpp"

using namespace apfx;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
  const Philox4x32 p(0);
  const auto out = p({0, 0, 0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const Philox4x32 p(~0ull);
  const auto out = p({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const Philox4x32 p(0x299f31d0a4093822ull);
  const auto out = p({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, PureFunctionOfKeyAndIndices) {
  const CounterRng a(42, Stream::driver), b(42, Stream::driver);
  // Query in different orders; values must not depend on history.
  std::vector<double> fwd, bwd;
  for (std::uint64_t i = 0; i < 50; ++i) fwd.push_back(a.normal(i, 3, 1));
  for (std::uint64_t i = 50; i-- > 0;) bwd.insert(bwd.begin(), b.normal(i, 3, 1));
  for (std::size_t i = 0; i < fwd.size(); ++i) EXPECT_TRUE(testkit::same_bits(fwd[i], bwd[i]));
}

TEST(CounterRng, StreamsAndLanesAreDistinct) {
  const CounterRng d(1, Stream::driver), t(1, Stream::battery);
  std::set<std::uint64_t> seen;
  for (std::uint32_t lane = 0; lane < 8; ++lane) {
    seen.insert(d.bits(5, 6, lane));
    seen.insert(t.bits(5, 6, lane));
  }
  EXPECT_EQ(seen.size(), 16u);
  EXPECT_NE(d.bits(1ull << 40, 0), d.bits(0, 0));
  EXPECT_NE(d.bits(0, 1ull << 40), d.bits(0, 0));
}

TEST(CounterRng, UniformRangeAndNormalMoments) {
  const CounterRng r(9, Stream::test_input);
  std::vector<double> z;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const double u = r.uniform(i, 0);
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    z.push_back(r.normal(i, 1, static_cast<std::uint32_t>(i % 2)));
  }
  const auto mo = testkit::moments(z);
  EXPECT_LT(std::abs(mo.mean), 5 * mo.se);
  EXPECT_LT(std::abs(mo.var - 1.0), 5 * mo.var_se);
}

TEST(Stats, MeanAndStandardError) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto e = stats::mean_se(xs);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  // population sd sqrt(1.25), divided by sqrt(4)
  EXPECT_DOUBLE_EQ(e.std_error, std::sqrt(1.25) / 2.0);
}

TEST(Stats, VarianceIsUnbiased) {
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::variance_se(xs).variance, 5.0 / 3.0);
}

TEST(Stats, QuantileType7) {
  const std::vector<double> xs{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.5), 2.5);
  // h = 3 * 0.9 = 2.7 -> 3 + 0.7 * (4 - 3)
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.9), 3.7);
  EXPECT_DOUBLE_EQ(stats::median({5.0}), 5.0);
}

TEST(Stats, DecreaseViolations) {
  const std::vector<double> s{5, 4, 4, 6, 1};
  EXPECT_EQ(stats::decrease_violations(s, true), 2u);
  EXPECT_EQ(stats::decrease_violations(s, false), 1u);
  EXPECT_EQ(stats::decrease_violations(std::vector<double>{}, true), 0u);
}

TEST(Stats, LeastSquaresRecoversExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = stats::least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r2, 1.0, 1e-14);
}
