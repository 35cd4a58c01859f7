#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "apfx/error.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "test_support.hpp"

using namespace apfx;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "grid": {"a": 0, "b": 1, "N": 16},
    "monte_carlo": {"M": 40, "seed": 5, "d_w": 1},
    "problem": {"preset": "gbm"},
    "scheme": {"levels": [4, 16]},
    "diagnostics": {"check": {"locality_trials": 10},
                    "tightness": {"pair_count": 8, "continuity_trials": 1}},
    "localize": {"radii": [0.5, 1, 100]}
  })");
}

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path write_config(const std::string& name, const json& j) {
  const auto dir = testkit::scratch_dir("cli_" + name);
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

}  // namespace

TEST(Config, DefaultsFillMissingSections) {
  const auto c = cli::parse_config(base_config());
  EXPECT_EQ(c.grid.N, 16u);
  EXPECT_EQ(c.scheme.damping, 0.5);
  EXPECT_EQ(c.scheme.tol, 1e-8);
  EXPECT_EQ(c.scheme.max_iter, 200u);
  EXPECT_EQ(c.scheme.box, "growth");
  EXPECT_EQ(c.diagnostics.battery_count, 8u);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(cli::grid_of(c).steps(), 16u);
  EXPECT_EQ(cli::scheme_of(c).levels.size(), 2u);
}

TEST(Config, RejectsUnknownKeysAndTypes) {
  auto j = base_config();
  j["grid"]["steps"] = 3;
  EXPECT_THROW(cli::parse_config(j), Error);
  j = base_config();
  j["extra"] = 1;
  EXPECT_THROW(cli::parse_config(j), Error);
  j = base_config();
  j["grid"]["N"] = "sixteen";
  EXPECT_THROW(cli::parse_config(j), Error);
  j = base_config();
  j["problem"]["operator"] = {{"op", "ito"}};
  EXPECT_THROW(cli::parse_config(j), Error);
  j = base_config();
  j["scheme"]["levels"] = {3, 16};
  EXPECT_THROW(cli::parse_config(j), Error);
  j = base_config();
  j["problem"]["params"] = {{"kappa", 1}};
  EXPECT_THROW(cli::parse_config(j), Error);
}

TEST(Config, JsonRoundTrip) {
  auto j = base_config();
  j["scheme"]["damping"] = 0.75;
  j["diagnostics"]["tightness"]["rho"] = {0.2, 0.4};
  const auto c = cli::parse_config(j);
  EXPECT_EQ(cli::parse_config(cli::to_json(c)), c);
}

TEST(OperatorGrammar, BuildsExpectedOperators) {
  const auto g = make_grid(0, 1, 8);
  const auto w = sample_driver(g, 3, 1, 1);
  testkit::Gen gen(1);
  const auto x = gen.ensemble(g, 3, 1);

  const auto ito = cli::build_operator(json{{"op", "ito"}}, g, 1);
  EXPECT_TRUE(testkit::same_bits(apply(ito, x, w), apply(ito_integral(), x, w)));

  const auto comp = cli::build_operator(
      json::parse(R"({"op": "compose", "parts": [
        {"op": "superposition", "coefficient": {"name": "tanh", "c": 2}},
        {"op": "lebesgue"}]})"),
      g, 1);
  const auto ref = compose({superposition(coefficients::scaled_tanh(2.0)), lebesgue_integral()});
  EXPECT_TRUE(testkit::same_bits(apply(comp, x, w), apply(ref, x, w)));

  const auto s = cli::build_operator(
      json::parse(R"({"op": "sum", "terms": [{"op": "constant", "value": 1.5}, {"op": "identity"}]})"), g, 1);
  const auto sx = apply(s, x, w);
  for (std::size_t e = 0; e < sx.values().size(); ++e) EXPECT_EQ(sx.values()[e], 1.5 + x.values()[e]);

  EXPECT_THROW(cli::build_operator(json{{"op", "warp"}}, g, 1), Error);
  EXPECT_THROW(cli::build_operator(json{{"op", "interp"}, {"n", 3}}, g, 1), Error);
}

TEST(Cli, SolveZeroCoefficientsIsConstant) {
  auto j = base_config();
  j["problem"]["params"] = {{"mu", 0.0}, {"sigma", 0.0}, {"x0", 2.0}};
  const auto path = write_config("zero", j);
  const auto out = path.parent_path() / "out";
  const auto r = run_cli({"solve", "--config", path.string(), "--output", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto levels = testkit::lines(testkit::slurp(out / "levels.csv"));
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels[1].substr(0, 4), "4,0,");
  EXPECT_TRUE(std::filesystem::exists(out / "solution.bin"));
}

TEST(Cli, DeterministicOutputs) {
  const auto path = write_config("det", base_config());
  const auto dir = path.parent_path();
  ASSERT_EQ(run_cli({"solve", "--config", path.string(), "--output", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"solve", "--config", path.string(), "--output", (dir / "b").string(), "--threads", "3"}).code, 0);
  for (const char* f : {"levels.csv", "pairwise.csv", "summary.csv", "solution.bin"}) {
    EXPECT_EQ(testkit::slurp(dir / "a" / f), testkit::slurp(dir / "b" / f)) << f;
  }
  ASSERT_EQ(run_cli({"solve", "--config", path.string(), "--output", (dir / "c").string(), "--seed", "99"}).code, 0);
  EXPECT_NE(testkit::slurp(dir / "a" / "solution.bin"), testkit::slurp(dir / "c" / "solution.bin"));
}

TEST(Cli, ConfigErrorsExitOne) {
  auto j = base_config();
  j["scheme"]["levels"] = {3};
  EXPECT_EQ(run_cli({"solve", "--config", write_config("div", j).string()}).code, 1);
  j = base_config();
  j["scheme"]["levels"] = json::array();
  EXPECT_EQ(run_cli({"scheme", "--config", write_config("empty", j).string()}).code, 1);
  EXPECT_EQ(run_cli({"solve", "--config", "/nonexistent/config.json"}).code, 1);
  EXPECT_EQ(run_cli({"solve"}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  const auto bad = testkit::scratch_dir("cli_badjson") / "c.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run_cli({"solve", "--config", bad.string()}).code, 1);
}

TEST(Cli, CheckOpExitCodes) {
  auto j = base_config();
  j["problem"] = {{"operator", {{"op", "ito"}}}};
  auto path = write_config("ito", j);
  auto r = run_cli({"check-op", "--config", path.string(), "--output", (path.parent_path() / "o").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto adapt = testkit::lines(testkit::slurp(path.parent_path() / "o" / "adaptedness.csv"));
  EXPECT_EQ(adapt.size(), 18u);

  j["problem"] = {{"operator", {{"op", "nonlocal_demo"}}}};
  path = write_config("nonlocal", j);
  EXPECT_EQ(run_cli({"check-op", "--config", path.string(), "--output", (path.parent_path() / "o").string()}).code, 3);

  j["problem"] = {{"operator", {{"op", "anticipating_demo"}}}};
  path = write_config("anticipating", j);
  EXPECT_EQ(run_cli({"check-op", "--config", path.string(), "--output", (path.parent_path() / "o").string()}).code, 3);

  j["problem"] = {{"operator", {{"op", "superposition"}}}};
  path = write_config("malformed", j);
  EXPECT_EQ(run_cli({"check-op", "--config", path.string()}).code, 1);
}

TEST(Cli, TightnessOnConstantOperatorIsDegenerateButOk) {
  auto j = base_config();
  j["problem"] = {{"operator", {{"op", "constant"}, {"value", 0.5}}}};
  const auto path = write_config("tight_const", j);
  const auto out = path.parent_path() / "o";
  const auto r = run_cli({"tightness", "--config", path.string(), "--output", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fit = testkit::lines(testkit::slurp(out / "kolmogorov_fit.csv"));
  ASSERT_GE(fit.size(), 2u);
  EXPECT_EQ(fit[1].back(), '1');
}

TEST(Cli, SchemeAndLocalizeWriteTheirTables) {
  const auto path = write_config("scheme", base_config());
  const auto out = path.parent_path() / "o";
  auto r = run_cli({"scheme", "--config", path.string(), "--output", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"levels.csv", "pairwise.csv", "narrow.csv", "strong_limit.csv", "strong_limit_verdict.csv",
                        "level_4.bin", "level_16.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  r = run_cli({"localize", "--config", path.string(), "--output", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(testkit::lines(testkit::slurp(out / "radii.csv")).size(), 4u);
  EXPECT_EQ(testkit::lines(testkit::slurp(out / "stopping.csv")).size(), 41u);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}).code, 0); }
