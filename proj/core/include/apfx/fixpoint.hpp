#pragma once

// Approximate fixed points x = h(x) through finite-dimensional Volterra
// projections and compact clamping: h_n = clamp_n o pi_n o h, solved level by
// level, with the true residual ||h alpha_n - alpha_n|| reported per scenario.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "apfx/operators.hpp"
#include "apfx/pathspace.hpp"
#include "apfx/projective.hpp"

namespace apfx {

// Level-n box is [center - R0 * n, center + R0 * n] at every node.
struct BoxGrowth {
  std::vector<double> center;
  double base_radius = 1.0;
};

using BoxRule = std::variant<CompactBox, BoxGrowth>;

struct SchemeConfig {
  std::vector<ProjectionLevel> levels;
  BoxRule box_rule = BoxGrowth{};
  double damping = 0.5;
  double tol = 1e-8;
  std::size_t max_iter = 200;
  std::uint64_t seed = 0;

  // Throws invalid_argument.
  void validate() const;
};

CompactBox level_box(const BoxRule& rule, const TimeGrid& grid, std::size_t dim, std::size_t n);

OperatorDescriptor build_hn(const OperatorDescriptor& h, const ProjectionLevel& level,
                            const CompactBox& box);

enum class SolveMethod { forward_substitution, picard };

struct LevelSolution {
  PathEnsemble alpha;
  std::vector<std::size_t> iterations;  // per scenario
  std::vector<double> residuals;        // per scenario ||h_n alpha - alpha||_sup
  SolveMethod method = SolveMethod::forward_substitution;
  bool converged = true;
};

// Strictly causal h_n: forward substitution (one pass, zero residual).
// Otherwise damped Picard alpha <- (1 - lambda) alpha + lambda h_n(alpha) per
// scenario until its residual is <= tol; scenarios that reach max_iter are
// left flagged (converged == false) rather than throwing.
LevelSolution solve_level(const OperatorDescriptor& h_n, const PathEnsemble& x0,
                          const DriverEnsemble& driver, const SchemeConfig& config);

struct LevelStats {
  std::size_t n = 0;
  double median_residual = 0.0;
  double frac_ge_1_over_n = 0.0;
  double bound_2_over_n = 0.0;
  std::size_t max_iterations = 0;
  bool converged = true;
  std::size_t clamp_activations = 0;  // entries of pi_n(h alpha_n) outside the box
  SolveMethod method = SolveMethod::forward_substitution;
};

struct SchemeResult {
  std::vector<PathEnsemble> alphas;
  std::vector<std::vector<double>> residuals;  // [level][scenario] ||h alpha - alpha||_sup
  std::vector<LevelStats> level_stats;
  std::vector<std::vector<MetricEstimate>> pairwise;  // d_sup(alpha_i, alpha_j)
  std::vector<std::vector<std::size_t>> iterations_used;

  bool converged() const noexcept;
};

SchemeResult run_scheme(const OperatorDescriptor& h, const SchemeConfig& config,
                        const DriverEnsemble& driver, const PathEnsemble& x_init);

enum class LimitVerdict { strong_limit_candidate, inconclusive };

const char* to_string(LimitVerdict v) noexcept;

struct StrongLimitReport {
  std::vector<double> successive;  // d(alpha_i, alpha_{i+1})
  std::vector<double> to_last;     // d(alpha_i, alpha_last), i < last
  std::size_t violations = 0;
  LimitVerdict verdict = LimitVerdict::inconclusive;
};

// Cauchy-in-probability proxy along the level sequence. Never claims uniqueness.
StrongLimitReport strong_limit_probe(const SchemeResult& result);

// levels.csv: n,median_residual,frac_ge_1_over_n,bound_2_over_n,iterations,
//             converged,clamp_activations,method
void write_levels_csv(std::ostream& out, const SchemeResult& result);
// pairwise.csv: n_i,n_j,distance,std_error
void write_pairwise_csv(std::ostream& out, const SchemeResult& result);
// level_<n>.bin per level + levels.csv + pairwise.csv
void write_scheme_result(const std::filesystem::path& dir, const SchemeResult& result);

}  // namespace apfx
