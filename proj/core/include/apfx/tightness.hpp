#pragma once

// Empirical diagnostics for tight sets and tight operators.
//
// A compact set of C[a,b] is described by a sup-norm bound and a finite list
// of modulus-of-continuity constraints (an Arzela-Ascoli surrogate); sampled
// paths are tested against its sigma-neighbourhood.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "apfx/operators.hpp"
#include "apfx/pathspace.hpp"
#include "apfx/projective.hpp"

namespace apfx {

// max |y(t) - y(s)|_inf over node pairs with |t - s| <= delta, for one path.
double path_modulus(std::span<const double> path, std::size_t dim, const TimeGrid& grid,
                    double delta);
double path_sup(std::span<const double> path);

struct ModulusRow {
  double delta = 0.0;
  double median = 0.0;
  double q95 = 0.0;
};

// Throws invalid_argument when a delta is below the grid step.
std::vector<ModulusRow> modulus_report(const PathEnsemble& y, const std::vector<double>& deltas);

struct MomentPair {
  std::size_t s = 0;  // node indices, s < t
  std::size_t t = 0;
  double gap = 0.0;
  double estimate = 0.0;  // E ||y(t) - y(s)||^2
  double std_error = 0.0;
};

struct RegularityFit {
  std::vector<MomentPair> pairs;
  double fitted_exponent = 0.0;
  double fitted_constant = 0.0;
  double r2 = 0.0;
  bool degenerate = false;  // fewer than two distinct positive estimates
};

RegularityFit kolmogorov_estimate(const PathEnsemble& y, std::size_t pair_count,
                                  std::uint64_t seed);

struct CompactSpec {
  double sup_bound = 0.0;
  std::vector<std::pair<double, double>> modulus;  // (delta, eta)
};

struct TightnessReport {
  double exceedance = 0.0;
  std::vector<double> per_ensemble;
  double sigma = 0.0;
  CompactSpec compact;
};

TightnessReport tight_set_probe(const std::vector<PathEnsemble>& ys, const CompactSpec& compact,
                                double sigma);

// Compact spec from the `level` quantiles of sup-norm and moduli of a
// reference ensemble (typically an independently seeded Brownian ensemble).
CompactSpec calibrate_compact(const PathEnsemble& reference, const std::vector<double>& deltas,
                              double level);

struct ContinuityRow {
  double rho = 0.0;
  double max_distance = 0.0;
};

// For each rho, draws `trials` pairs u, v inside the box with ||u - v||_sup <= rho
// and records the largest d_sup(h u, h v). Rows sorted by rho ascending.
std::vector<ContinuityRow> uniform_continuity_probe(const OperatorDescriptor& op,
                                                    const CompactBox& box,
                                                    std::vector<double> rho_values,
                                                    std::size_t trials,
                                                    const DriverEnsemble& driver,
                                                    std::uint64_t seed);

void write_csv(std::ostream& out, const std::vector<ModulusRow>& rows);
// Pair table; write_fit_csv holds the fitted line.
void write_csv(std::ostream& out, const RegularityFit& fit);
void write_fit_csv(std::ostream& out, const RegularityFit& fit);
void write_csv(std::ostream& out, const TightnessReport& report);
void write_csv(std::ostream& out, const std::vector<ContinuityRow>& rows);

}  // namespace apfx
