#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sumo/linalg.hpp"
#include "sumo/optimizer.hpp"

namespace sumo {

/// Synchronized per-step diagnostics of one layer: the rank-one relative
/// error of the moment, its Gram condition number (+inf when singular),
/// the error-bound telemetry, the loss and the gradient norm.
struct SpectralTrace {
  std::vector<std::int64_t> steps;
  std::vector<double> kappa_m;             // in [0, 1]
  std::vector<double> condition_numbers;   // >= 1 or +inf
  std::vector<std::optional<double>> ns_errors;
  std::vector<std::optional<double>> ns_bounds;
  std::vector<double> losses;
  std::vector<bool> loss_finite;
  std::vector<double> grad_norms;

  std::size_t size() const { return steps.size(); }
};

struct StepRange {
  std::int64_t first = 0;
  std::int64_t last = 0;  // inclusive
};

/// Ordinary least squares on (t, ln kappa_M(t)).
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // reported as 0 when the fit is degenerate
  StepRange window;
  int excluded_points = 0;  // rows with kappa_m == 0, excluded from the fit
};

/// Appends one synchronized row. The moment's spectral quantities come from
/// the state as it stands after the step; a zero moment records kappa = 0 and
/// condition number +inf. A non-finite loss is recorded and flagged, never
/// dropped.
void record_step(SpectralTrace& trace, const LayerState& state, const StepReport& report,
                 double loss);

/// Fits ln kappa_M(t) = intercept + slope * t over the window, excluding rows
/// with kappa = 0. Throws when fewer than 10 usable rows remain.
DecayFit fit_exponential_decay(const SpectralTrace& trace, StepRange window);

/// Measured Newton-Schulz error against the exact polar factor, paired with
/// the closed-form bound evaluated at the matrix's Gram condition number and
/// spectral-structure rank. A singular Gram spectrum reports bound = +inf
/// while the measured error is still returned.
std::pair<double, double> ns_error_vs_bound(const Matrix& m, const NewtonSchulzVariant& variant);

}  // namespace sumo
