#include "sumo/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sumo {

namespace {

/// Largest index r with s_r > s_{r+1} = ... = s_m on a non-increasing
/// spectrum; the count of directions ahead of the trailing equal block.
int spectral_structure_rank(const Vector& s) {
  const double last = s(s.size() - 1);
  const double tol = 1e-9 * std::max(s(0), 1e-300);
  Eigen::Index block_start = s.size() - 1;
  while (block_start > 0 && std::abs(s(block_start - 1) - last) <= tol) {
    --block_start;
  }
  return static_cast<int>(std::max<Eigen::Index>(block_start, 1));
}

}  // namespace

void record_step(SpectralTrace& trace, const LayerState& state, const StepReport& report,
                 double loss) {
  const Matrix& moment = state.projected_moment;
  double kappa = 0.0;
  double condition = std::numeric_limits<double>::infinity();
  if (moment.size() > 0 && moment.norm() > 0.0) {
    kappa = rank_one_relative_error(moment);
    condition = condition_number_gram(moment);
  }
  trace.steps.push_back(state.step);
  trace.kappa_m.push_back(kappa);
  trace.condition_numbers.push_back(condition);
  trace.ns_errors.push_back(std::nullopt);
  trace.ns_bounds.push_back(report.orthogonalization_error_estimate);
  trace.losses.push_back(loss);
  trace.loss_finite.push_back(std::isfinite(loss));
  trace.grad_norms.push_back(report.grad_norm);
}

DecayFit fit_exponential_decay(const SpectralTrace& trace, StepRange window) {
  DecayFit fit;
  fit.window = window;

  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto step = trace.steps[i];
    if (step < window.first || step > window.last) continue;
    const double k = trace.kappa_m[i];
    if (k <= 0.0) {
      ++fit.excluded_points;
      continue;
    }
    ts.push_back(static_cast<double>(step));
    logs.push_back(std::log(k));
  }
  if (ts.size() < 10) {
    throw std::invalid_argument("fit_exponential_decay: fewer than 10 usable points in window");
  }

  const double n = static_cast<double>(ts.size());
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mean_t += ts[i];
    mean_y += logs[i];
  }
  mean_t /= n;
  mean_y /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dt = ts[i] - mean_t;
    const double dy = logs[i] - mean_y;
    sxx += dt * dt;
    sxy += dt * dy;
    syy += dy * dy;
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = mean_y - fit.slope * mean_t;

  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double resid = logs[i] - (fit.intercept + fit.slope * ts[i]);
    ss_res += resid * resid;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 0.0;
  return fit;
}

std::pair<double, double> ns_error_vs_bound(const Matrix& m, const NewtonSchulzVariant& variant) {
  const Matrix approx = newton_schulz_orthogonalize(m, variant);
  const Matrix exact = orthogonalize_svd(m);
  const double measured = (approx - exact).norm();

  const Matrix oriented = m.rows() <= m.cols() ? m : Matrix(m.transpose());
  const double kappa = condition_number_gram(oriented);
  if (std::isinf(kappa)) {
    return {measured, std::numeric_limits<double>::infinity()};
  }
  // Equal trailing singular values of the Gram spectrum coincide with those
  // of the matrix itself, so the structure rank can be read off directly.
  const int r = spectral_structure_rank(svd(oriented).singular_values);
  return {measured, newton_schulz_error_bound(kappa, r, variant.iterations)};
}

}  // namespace sumo
