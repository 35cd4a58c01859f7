#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "apfx/error.hpp"
#include "apfx/youngdiag.hpp"
#include "test_support.hpp"

using namespace apfx;
using testkit::Gen;

namespace {

const TestFunctional& by_name(const std::vector<TestFunctional>& battery, const std::string& name) {
  for (const auto& f : battery) {
    if (f.name == name) return f;
  }
  throw std::runtime_error("no functional " + name);
}

}  // namespace

TEST(Battery, ContainsRequiredKinds) {
  const auto g = make_grid(0, 1, 16);
  const auto b = test_battery(g, 1, 1, 3, 7);
  ASSERT_EQ(b.size(), 5u);
  EXPECT_EQ(b[0].name, "endpoint_norm");
  EXPECT_EQ(b[1].name, "sup_norm");
  EXPECT_EQ(b[2].name, "time_average");
  EXPECT_EQ(b[3].name.rfind("sin_linear", 0), 0u);
  EXPECT_EQ(b[4].name.rfind("sin_xw_node", 0), 0u);
  EXPECT_EQ(test_battery(g, 1, 1, 9, 7).size(), 9u);
  EXPECT_THROW(test_battery(g, 1, 1, 0, 7), Error);
}

TEST(Battery, Examples) {
  const auto g = make_grid(0, 1, 16);
  const auto b = test_battery(g, 1, 1, 5, 7);
  const std::vector<double> zero(g.node_count(), 0.0), three(g.node_count(), 3.0);
  EXPECT_EQ(by_name(b, "endpoint_norm")(zero, zero), 0.0);
  EXPECT_EQ(by_name(b, "sup_norm")(three, zero), 1.0);
  EXPECT_EQ(by_name(b, "time_average")(three, zero), 1.0);
  std::vector<double> ramp(g.node_count());
  for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = 0.5 * g.node(k);
  EXPECT_DOUBLE_EQ(by_name(b, "endpoint_norm")(ramp, zero), 0.5);
}

TEST(Battery, DeterministicInSeed) {
  const auto g = make_grid(0, 1, 16);
  const auto a = test_battery(g, 2, 2, 8, 11), b = test_battery(g, 2, 2, 8, 11), c = test_battery(g, 2, 2, 8, 12);
  Gen gen(1);
  const auto x = gen.ensemble(g, 1, 2), w = gen.ensemble(g, 1, 2);
  bool any_diff = false;
  for (std::size_t f = 0; f < a.size(); ++f) {
    EXPECT_EQ(a[f].name, b[f].name);
    EXPECT_TRUE(testkit::same_bits(a[f](x.scenario(0), w.scenario(0)), b[f](x.scenario(0), w.scenario(0))));
    any_diff = any_diff || a[f](x.scenario(0), w.scenario(0)) != c[f](x.scenario(0), w.scenario(0));
  }
  EXPECT_TRUE(any_diff);
}

TEST(Battery, BoundedOnArbitraryInputs) {
  const auto g = make_grid(0, 1, 8);
  const auto b = test_battery(g, 2, 1, 12, 3);
  Gen gen(2);
  for (int trial = 0; trial < 300; ++trial) {
    const double scale = std::pow(10.0, gen.uniform(-3, 8));
    const auto x = gen.ensemble(g, 1, 2, scale), w = gen.ensemble(g, 1, 1, scale);
    for (const auto& f : b) {
      const double v = f(x.scenario(0), w.scenario(0));
      EXPECT_LE(std::abs(v), 1.0) << f.name;
    }
  }
}

TEST(NarrowStats, IdenticalSequenceHasZeroDifferences) {
  const auto g = make_grid(0, 1, 16);
  const auto w = sample_driver(g, 40, 1, 3);
  Gen gen(3);
  const auto x = gen.walks(g, 40, 1);
  const std::vector<PathEnsemble> alphas{x, x, x};
  const std::vector<std::size_t> levels{2, 4, 8};
  const auto t = narrow_stats(alphas, levels, w, test_battery(g, 1, 1, 6, 3));
  EXPECT_EQ(t.rows.size(), 18u);
  for (const auto& r : t.rows) {
    if (r.n == 2) {
      EXPECT_TRUE(std::isnan(r.diff));
    } else {
      EXPECT_EQ(r.diff, 0.0);
    }
  }
  EXPECT_DOUBLE_EQ(t.settling_fraction(), 1.0);
}

TEST(NarrowStats, PureAndPermutationInvariant) {
  const auto g = make_grid(0, 1, 16);
  const std::size_t M = 60;
  const auto w = sample_driver(g, M, 2, 4);
  Gen gen(4);
  const std::vector<PathEnsemble> alphas{gen.walks(g, M, 2), gen.walks(g, M, 2)};
  const std::vector<std::size_t> levels{4, 16};
  const auto battery = test_battery(g, 2, 2, 10, 4);
  const auto t1 = narrow_stats(alphas, levels, w, battery);
  const auto t2 = narrow_stats(alphas, levels, w, battery);

  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = M - 1; i > 0; --i) std::swap(order[i], order[gen.index(i + 1)]);
  std::vector<PathEnsemble> shuffled;
  for (const auto& a : alphas) {
    PathEnsemble s(g, M, 2);
    for (std::size_t m = 0; m < M; ++m) {
      const auto src = a.scenario(order[m]);
      std::copy(src.begin(), src.end(), s.scenario(m).begin());
    }
    shuffled.push_back(std::move(s));
  }
  const auto t3 = narrow_stats(shuffled, levels, w.permuted(order), battery);
  ASSERT_EQ(t1.rows.size(), t3.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    EXPECT_TRUE(testkit::same_bits(t1.rows[i].estimate, t2.rows[i].estimate));
    EXPECT_TRUE(testkit::same_bits(t1.rows[i].estimate, t3.rows[i].estimate)) << t1.rows[i].functional;
    EXPECT_TRUE(testkit::same_bits(t1.rows[i].std_error, t3.rows[i].std_error));
  }
}

TEST(NarrowStats, ConvergentSequenceSettles) {
  const auto g = make_grid(0, 1, 32);
  const std::size_t M = 200;
  const auto w = sample_driver(g, M, 1, 5);
  Gen gen(5);
  PathEnsemble x(g, M, 1);
  for (double& v : x.values()) v = gen.uniform(-0.4, 0.4);
  std::vector<PathEnsemble> alphas;
  std::vector<std::size_t> levels;
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 32u}) {
    PathEnsemble a = x;
    for (double& v : a.values()) v += v / static_cast<double>(n);
    alphas.push_back(std::move(a));
    levels.push_back(n);
  }
  const auto t = narrow_stats(alphas, levels, w, test_battery(g, 1, 1, 10, 5));
  for (std::size_t f = 0; f < t.functionals.size(); ++f) EXPECT_TRUE(t.settling[f]) << t.functionals[f];
  EXPECT_DOUBLE_EQ(t.settling_fraction(), 1.0);
}

TEST(WeakSummary, ConstantEnsemble) {
  const auto g = make_grid(0, 1, 4);
  const auto w = sample_driver(g, 10, 1, 6);
  const auto s = weak_summary(testkit::filled(g, 10, 2, 1.5), w);
  EXPECT_EQ(s.moments.size(), g.node_count() * 2);
  for (const auto& nm : s.moments) {
    EXPECT_EQ(nm.mean, 1.5);
    EXPECT_EQ(nm.variance, 0.0);
  }
}

TEST(WeakSummary, BrownianMarginalVariance) {
  const auto g = make_grid(0, 1, 8);
  const auto w = sample_driver(g, 20000, 1, 7);
  const auto s = weak_summary(w.as_paths(), w, {1e18, 0.5});
  for (const auto& nm : s.moments) {
    if (nm.node == 0) continue;
    EXPECT_LT(std::abs(nm.variance - g.node(nm.node)), 4 * nm.variance_se) << nm.node;
  }
  EXPECT_EQ(s.exceedance.at(0).second, 0.0);
  EXPECT_GT(s.exceedance.at(1).second, 0.5);
}

TEST(YoungdiagCsv, Headers) {
  const auto g = make_grid(0, 1, 4);
  const auto w = sample_driver(g, 5, 1, 8);
  const auto x = w.as_paths();
  const std::vector<PathEnsemble> alphas{x, x};
  const std::vector<std::size_t> levels{2, 4};
  std::ostringstream a, b, c;
  write_csv(a, narrow_stats(alphas, levels, w, test_battery(g, 1, 1, 5, 8)));
  EXPECT_EQ(testkit::lines(a.str()).at(0), "functional,n,estimate,se,diff");
  const auto s = weak_summary(x, w);
  write_summary_csv(b, s, g);
  EXPECT_EQ(testkit::lines(b.str()).at(0), "node_index,time,coord,mean,mean_se,variance,variance_se");
  write_exceedance_csv(c, s);
  EXPECT_EQ(testkit::lines(c.str()).at(0), "radius,probability");
}
