#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "apfx/error.hpp"
#include "apfx/tightness.hpp"
#include "test_support.hpp"

using namespace apfx;
using testkit::Gen;

TEST(Modulus, ConstantAndLinearPaths) {
  const auto g = make_grid(0, 1, 20);
  const auto c = testkit::filled(g, 3, 1, 4.0);
  for (const auto& row : modulus_report(c, {0.05, 0.1, 0.5})) {
    EXPECT_EQ(row.median, 0.0);
    EXPECT_EQ(row.q95, 0.0);
  }
  const auto lin = testkit::from_time(g, 3, [](double t) { return t; });
  const auto rows = modulus_report(lin, {0.1});
  EXPECT_NEAR(rows[0].median, 0.1, 1e-15);
  EXPECT_NEAR(rows[0].q95, 0.1, 1e-15);
}

TEST(Modulus, BruteForceOracle) {
  const auto g = make_grid(0, 2, 24);
  Gen gen(1);
  const auto x = gen.walks(g, 5, 2);
  for (double delta : {g.dt(), 0.25, 0.5, 2.0}) {
    for (std::size_t m = 0; m < 5; ++m) {
      double worst = 0.0;
      for (std::size_t s = 0; s < g.node_count(); ++s) {
        for (std::size_t t = s; t < g.node_count(); ++t) {
          if (g.node(t) - g.node(s) > delta + 1e-12) continue;
          for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(x.at(m, t, i) - x.at(m, s, i)));
        }
      }
      EXPECT_EQ(path_modulus(x.scenario(m), 2, g, delta), worst) << delta;
    }
  }
}

TEST(Modulus, GapBelowGridStepThrows) {
  const auto g = make_grid(0, 1, 10);
  EXPECT_THROW(modulus_report(testkit::filled(g, 1, 1, 0.0), {0.01}), Error);
}

TEST(Modulus, BrownianMedianShrinksWithGap) {
  const auto g = make_grid(0, 1, 128);
  const auto w = sample_driver(g, 500, 1, 2).as_paths();
  const auto rows = modulus_report(w, {0.5, 0.25, 0.125, 0.0625, 0.03125});
  std::vector<double> med;
  for (const auto& r : rows) med.push_back(r.median);
  EXPECT_LE(testkit::rises(med, true), 1);
}

TEST(Kolmogorov, BrownianExponentNearOne) {
  const auto g = make_grid(0, 1, 256);
  const auto w = sample_driver(g, 10000, 1, 3).as_paths();
  const auto fit = kolmogorov_estimate(w, 64, 3);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_GE(fit.fitted_exponent, 0.8);
  EXPECT_LE(fit.fitted_exponent, 1.2);
  for (const auto& p : fit.pairs) {
    EXPECT_LT(p.s, p.t);
    EXPECT_LT(std::abs(p.estimate - p.gap), 4 * p.std_error + 1e-12);
  }
}

TEST(Kolmogorov, ConstantIsDegenerate) {
  const auto g = make_grid(0, 1, 32);
  const auto fit = kolmogorov_estimate(testkit::filled(g, 10, 1, 2.0), 16, 4);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_TRUE(std::isnan(fit.fitted_exponent));
  EXPECT_THROW(kolmogorov_estimate(testkit::filled(g, 10, 1, 2.0), 1, 4), Error);
}

TEST(Kolmogorov, BoundedIntegrandPairsBelowGap) {
  const auto g = make_grid(0, 1, 128);
  const auto w = sample_driver(g, 4000, 1, 5);
  PathEnsemble u = w.as_paths();
  for (double& v : u.values()) v = std::cos(3.0 * v);
  const auto y = apply(ito_integral(), u, w);
  const auto fit = kolmogorov_estimate(y, 48, 5);
  for (const auto& p : fit.pairs) EXPECT_LE(p.estimate, p.gap + 4 * p.std_error);
}

TEST(TightSetProbe, DirectCounts) {
  const auto g = make_grid(0, 1, 16);
  const CompactSpec compact{1.0, {{0.25, 0.5}}};
  const auto inside = tight_set_probe({testkit::filled(g, 10, 1, 0.75), testkit::filled(g, 10, 1, -1.0)}, compact, 0.0);
  EXPECT_EQ(inside.exceedance, 0.0);
  EXPECT_EQ(inside.per_ensemble.size(), 2u);

  auto y = testkit::filled(g, 100, 1, 0.5);
  y.at(37, 3, 0) = 10.0;
  const auto one = tight_set_probe({y}, compact, 0.0);
  EXPECT_DOUBLE_EQ(one.exceedance, 0.01);
  EXPECT_THROW(tight_set_probe({}, compact, 0.0), Error);
}

TEST(TightSetProbe, SigmaWidensTheSet) {
  const auto g = make_grid(0, 1, 16);
  const CompactSpec compact{1.0, {}};
  const auto y = testkit::filled(g, 4, 1, 1.05);
  EXPECT_EQ(tight_set_probe({y}, compact, 0.0).exceedance, 1.0);
  EXPECT_EQ(tight_set_probe({y}, compact, 0.1).exceedance, 0.0);
}

TEST(TightSetProbe, BoundedItoOutputsInsideCalibratedCompact) {
  const auto g = make_grid(0, 1, 64);
  const std::vector<double> deltas{0.0625, 0.125, 0.25};
  const auto reference = sample_driver(g, 4000, 1, 987654321).as_paths();
  const auto compact = calibrate_compact(reference, deltas, 0.99);
  const auto w = sample_driver(g, 2000, 1, 6);
  const auto h = compose({superposition(coefficients::scaled_tanh(1.0)), ito_integral()});
  std::vector<PathEnsemble> ys;
  Gen gen(6);
  for (int e = 0; e < 4; ++e) ys.push_back(apply(h, gen.ensemble(g, 2000, 1, 3.0), w));
  EXPECT_LT(tight_set_probe(ys, compact, 0.05).exceedance, 0.05);
}

TEST(CalibrateCompact, QuantilesOfReference) {
  const auto g = make_grid(0, 1, 4);
  PathEnsemble x(g, 3, 1);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t k = 0; k < g.node_count(); ++k) x.at(m, k, 0) = static_cast<double>(m + 1) * g.node(k);
  }
  const auto c = calibrate_compact(x, {0.25}, 0.5);
  EXPECT_DOUBLE_EQ(c.sup_bound, 2.0);
  ASSERT_EQ(c.modulus.size(), 1u);
  EXPECT_DOUBLE_EQ(c.modulus[0].second, 0.5);
}

TEST(UniformContinuity, IdentityAndLipschitz) {
  const auto g = make_grid(0, 1, 16);
  const auto w = sample_driver(g, 50, 1, 7);
  const auto box = CompactBox::uniform(g, 1, -1, 1);
  for (const auto& op : {identity_operator(), superposition(coefficients::sine())}) {
    for (const auto& row : uniform_continuity_probe(op, box, {0.3, 0.01, 0.1}, 3, w, 7)) {
      EXPECT_LE(row.max_distance, row.rho);
    }
  }
  const auto rows = uniform_continuity_probe(identity_operator(), box, {0.3, 0.01, 0.1}, 1, w, 7);
  EXPECT_EQ(rows.front().rho, 0.01);
  EXPECT_THROW(uniform_continuity_probe(identity_operator(), box, {0.0}, 1, w, 7), Error);
}

TEST(UniformContinuity, ItoShrinksWithRho) {
  const auto g = make_grid(0, 1, 64);
  const auto w = sample_driver(g, 400, 1, 8);
  const auto box = CompactBox::uniform(g, 1, -1, 1);
  const auto rows = uniform_continuity_probe(ito_integral(), box, {0.4, 0.2, 0.1, 0.05}, 4, w, 8);
  std::vector<double> d;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) d.push_back(it->max_distance);
  EXPECT_LE(testkit::rises(d, true), 1);
}

TEST(TightnessCsv, Headers) {
  std::ostringstream a, b, c, d, e;
  write_csv(a, std::vector<ModulusRow>{{0.5, 1.0, 2.0}});
  EXPECT_EQ(testkit::lines(a.str()).at(0), "delta,median,q95");
  RegularityFit fit;
  fit.pairs.push_back({0, 2, 0.5, 0.5, 0.01});
  write_csv(b, fit);
  EXPECT_EQ(testkit::lines(b.str()).at(0), "s,t,gap,estimate,se");
  write_fit_csv(c, fit);
  EXPECT_EQ(testkit::lines(c.str()).at(0), "exponent,constant,r2,degenerate");
  write_csv(d, TightnessReport{0.1, {0.1}, 0.05, {}});
  EXPECT_EQ(testkit::lines(d.str()).size(), 3u);
  write_csv(e, std::vector<ContinuityRow>{{0.1, 0.05}});
  EXPECT_EQ(testkit::lines(e.str()).at(0), "rho,max_distance");
}
