#include <gtest/gtest.h>

#include <cmath>

#include "apfx/error.hpp"
#include "apfx/projective.hpp"
#include "test_support.hpp"

using namespace apfx;
using testkit::Gen;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected apfx::Error";
  return Errc::io;
}

// Copy of x whose nodes after `last` are replaced by fresh noise.
PathEnsemble perturb_after(const PathEnsemble& x, std::size_t last, Gen& gen) {
  PathEnsemble y = x;
  for (std::size_t m = 0; m < y.scenarios(); ++m) {
    for (std::size_t k = last + 1; k < y.node_count(); ++k) {
      for (std::size_t i = 0; i < y.dim(); ++i) y.at(m, k, i) = gen.normal(3.0);
    }
  }
  return y;
}

}  // namespace

TEST(ProjectionLevel, AnchorsAndDivisibility) {
  const auto g = make_grid(0, 2, 8);
  const auto lv = make_level(g, 4);
  ASSERT_EQ(lv.anchor_nodes.size(), 5u);
  EXPECT_EQ(lv.anchor_nodes.front(), 0.0);
  EXPECT_EQ(lv.anchor_nodes.back(), 2.0);
  EXPECT_EQ(lv.anchor_nodes[1], 0.5);
  EXPECT_EQ(lv.stride(g), 2u);
  EXPECT_FALSE(lv.is_identity_on(g));
  EXPECT_TRUE(make_level(g, 8).is_identity_on(g));
  EXPECT_EQ(code_of([&] { make_level(g, 3); }), Errc::divisibility);
  EXPECT_EQ(code_of([&] { make_level(g, 0); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { volterra_interp(PathEnsemble(make_grid(0, 1, 6), 1, 1), lv); }),
            Errc::divisibility);
}

TEST(VolterraInterp, LinearPathIsFixed) {
  const auto g = make_grid(0, 1, 4);
  const auto x = testkit::from_time(g, 2, [](double t) { return t; });
  EXPECT_TRUE(testkit::same_bits(volterra_interp(x, make_level(g, 2)), x));
}

TEST(VolterraInterp, SquareMidpoint) {
  const auto g = make_grid(0, 1, 4);
  const auto x = testkit::from_time(g, 1, [](double t) { return t * t; });
  const auto y = volterra_interp(x, make_level(g, 2));
  // Hand evaluation: midpoint of x(0) = 0 and x(0.5) = 0.25.
  EXPECT_EQ(y.at(0, 1, 0), 0.125);
  EXPECT_EQ(y.at(0, 2, 0), 0.25);
  // Between 0.25 and 1: (0.25 + 1) / 2.
  EXPECT_EQ(y.at(0, 3, 0), 0.625);
}

TEST(VolterraInterp, ConstantsPreserved) {
  const auto g = make_grid(-1, 3, 12);
  const auto x = testkit::filled(g, 3, 2, -4.25);
  for (std::size_t n : {1u, 2u, 3u, 4u, 6u, 12u}) {
    EXPECT_TRUE(testkit::same_bits(volterra_interp(x, make_level(g, n)), x)) << n;
  }
}

TEST(VolterraInterp, MatchesTimeBasedOracle) {
  const auto g = make_grid(0.3, 1.9, 24);
  Gen gen(5);
  const auto x = gen.walks(g, 6, 2);
  for (std::size_t n : {1u, 2u, 3u, 8u, 24u}) {
    const auto y = volterra_interp(x, make_level(g, n));
    for (std::size_t m = 0; m < 6; ++m) {
      for (std::size_t k = 0; k < g.node_count(); ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
          EXPECT_NEAR(y.at(m, k, i), testkit::interp_oracle(x, m, k, i, n), 1e-13);
        }
      }
    }
  }
}

TEST(VolterraInterp, LinearityToMachinePrecision) {
  const auto g = make_grid(0, 1, 32);
  Gen gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = gen.ensemble(g, 4, 2), y = gen.ensemble(g, 4, 2);
    const double a = gen.normal(), b = gen.normal();
    PathEnsemble combo(g, 4, 2);
    for (std::size_t e = 0; e < combo.values().size(); ++e) {
      combo.values()[e] = a * x.values()[e] + b * y.values()[e];
    }
    const auto lv = make_level(g, 1u << gen.index(6));
    const auto lhs = volterra_interp(combo, lv);
    const auto px = volterra_interp(x, lv), py = volterra_interp(y, lv);
    for (std::size_t e = 0; e < lhs.values().size(); ++e) {
      const double rhs = a * px.values()[e] + b * py.values()[e];
      EXPECT_NEAR(lhs.values()[e], rhs, 1e-13 * (1.0 + std::abs(rhs)));
    }
  }
}

TEST(VolterraInterp, Idempotent) {
  const auto g = make_grid(0, 1, 48);
  Gen gen(7);
  for (std::size_t n : {1u, 2u, 3u, 4u, 6u, 8u, 12u, 16u, 24u, 48u}) {
    const auto lv = make_level(g, n);
    const auto once = volterra_interp(gen.ensemble(g, 5, 3), lv);
    EXPECT_TRUE(testkit::same_bits(volterra_interp(once, lv), once)) << n;
  }
}

TEST(Projections, GeneralizedVolterraPrefix) {
  const auto g = make_grid(0, 1, 32);
  Gen gen(8);
  const auto box = CompactBox::uniform(g, 2, -0.7, 0.9);
  for (std::size_t n : {2u, 4u, 8u, 32u}) {
    const auto lv = make_level(g, n);
    const std::size_t stride = lv.stride(g);
    for (std::size_t anchor = 0; anchor <= n; ++anchor) {
      const std::size_t k = anchor * stride;
      const auto x = gen.walks(g, 4, 2);
      const auto y = perturb_after(x, k, gen);
      EXPECT_TRUE(testkit::prefix_equal(volterra_interp(x, lv), volterra_interp(y, lv), k));
      EXPECT_TRUE(testkit::prefix_equal(mollify(x, lv), mollify(y, lv), k));
      EXPECT_TRUE(testkit::prefix_equal(clamp_box(x, box), clamp_box(y, box), k));
    }
  }
}

TEST(Mollify, KernelHasUnitMass) {
  const auto g = make_grid(0, 2, 64);
  for (std::size_t n : {1u, 2u, 8u, 32u, 64u}) {
    const auto w = mollifier_weights(g, make_level(g, n));
    double mass = 0.0;
    for (double v : w) {
      EXPECT_GE(v, 0.0);
      mass += v * g.dt();
    }
    EXPECT_NEAR(mass, 1.0, 1e-14) << n;
    // A one-step support collapses to a point mass at lag 0.
    const std::size_t stride = g.steps() / n;
    EXPECT_EQ(w.size(), stride == 1 ? 1u : stride + 1);
  }
}

TEST(Mollify, ConstantsOnceSupportInside) {
  const auto g = make_grid(0, 1, 64);
  const auto x = testkit::filled(g, 2, 1, 1.75);
  for (std::size_t n : {2u, 4u, 16u}) {
    const auto lv = make_level(g, n);
    const auto y = mollify(x, lv);
    const std::size_t first = lv.stride(g);
    for (std::size_t k = first; k < g.node_count(); ++k) EXPECT_NEAR(y.at(0, k, 0), 1.75, 1e-13);
  }
  EXPECT_TRUE(testkit::same_bits(mollify(testkit::filled(g, 2, 1, 0.0), make_level(g, 4)),
                                 testkit::filled(g, 2, 1, 0.0)));
}

TEST(Mollify, BrownianDistanceShrinksWithN) {
  const auto g = make_grid(0, 1, 64);
  int bad_seeds = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w = sample_driver(g, 200, 1, 1000 + seed).as_paths();
    std::vector<double> d;
    for (std::size_t n : {2u, 4u, 8u, 16u}) d.push_back(prob_metric(mollify(w, make_level(g, n)), w, Norm::l2).value);
    if (testkit::rises(d, true) > 1) ++bad_seeds;
  }
  EXPECT_EQ(bad_seeds, 0);
}

TEST(ClampBox, Examples) {
  const auto g = make_grid(0, 1, 2);
  const PathEnsemble x(g, 1, 1, {-2.0, 0.5, 3.0});
  const auto box = CompactBox::uniform(g, 1, -1, 1);
  const auto y = clamp_box(x, box);
  EXPECT_EQ(y.at(0, 0, 0), -1.0);
  EXPECT_EQ(y.at(0, 1, 0), 0.5);
  EXPECT_EQ(y.at(0, 2, 0), 1.0);
  EXPECT_TRUE(testkit::same_bits(clamp_box(y, box), y));
}

TEST(ClampBox, ShapeMismatchAndInvalidBox) {
  const auto g = make_grid(0, 1, 2);
  const auto box = CompactBox::uniform(g, 2, -1, 1);
  EXPECT_EQ(code_of([&] { clamp_box(PathEnsemble(g, 1, 1), box); }), Errc::shape_mismatch);
  EXPECT_EQ(code_of([&] { CompactBox::uniform(g, 1, 1, -1); }), Errc::invalid_argument);
}

TEST(ClampBox, Properties) {
  const auto g = make_grid(0, 1, 16);
  Gen gen(9);
  std::vector<double> lo, hi;
  for (std::size_t e = 0; e < g.node_count() * 2; ++e) {
    const double c = gen.normal(), r = std::abs(gen.normal());
    lo.push_back(c - r);
    hi.push_back(c + r);
  }
  const CompactBox box(g.node_count(), 2, lo, hi);
  for (int pair = 0; pair < 500; ++pair) {
    const auto x = gen.ensemble(g, 3, 2, 2.0), y = gen.ensemble(g, 3, 2, 2.0);
    const auto cx = clamp_box(x, box), cy = clamp_box(y, box);
    EXPECT_TRUE(box.contains(cx));
    EXPECT_TRUE(testkit::same_bits(clamp_box(cx, box), cx));
    for (std::size_t m = 0; m < 3; ++m) {
      const double before = path_distance(x.scenario(m), y.scenario(m), 2, g, Norm::sup);
      const double after = path_distance(cx.scenario(m), cy.scenario(m), 2, g, Norm::sup);
      EXPECT_LE(after, before);
    }
  }
  // Points already inside are untouched.
  const auto inside = clamp_box(gen.ensemble(g, 3, 2), box);
  EXPECT_TRUE(testkit::same_bits(clamp_box(inside, box), inside));
}

TEST(PiProbe, ConstantAndLinearInputs) {
  const auto g = make_grid(0, 1, 64);
  std::vector<ProjectionLevel> levels;
  for (std::size_t n : {2u, 4u, 8u, 16u}) levels.push_back(make_level(g, n));
  for (const auto& row : property_pi_probe(testkit::filled(g, 5, 1, 2.5), levels)) EXPECT_EQ(row.distance, 0.0);
  const auto lin = testkit::from_time(g, 5, [](double t) { return 3.0 * t - 1.0; });
  for (const auto& row : property_pi_probe(lin, levels)) EXPECT_LT(row.distance, 1e-14);
}

TEST(PiProbe, BrownianDistancesNonIncreasing) {
  const auto g = make_grid(0, 1, 64);
  const auto w = sample_driver(g, 2000, 1, 21).as_paths();
  std::vector<ProjectionLevel> levels;
  for (std::size_t n : {2u, 4u, 8u, 16u}) levels.push_back(make_level(g, n));
  const auto rows = property_pi_probe(w, levels);
  std::vector<double> d;
  for (const auto& r : rows) d.push_back(r.distance);
  EXPECT_LE(testkit::rises(d, false), 1);
  EXPECT_EQ(rows[0].n, 2u);
}
