#include "sumo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sumo {

namespace {

bool stored_transposed(const Matrix& weight) { return weight.rows() < weight.cols(); }

void require_same_shape(const Matrix& g, const Matrix& w) {
  if (g.rows() != w.rows() || g.cols() != w.cols()) {
    throw std::invalid_argument("gradient shape does not match weight shape");
  }
}

void require_rank_fits(const LayerState& state, const OptimizerConfig& cfg) {
  const auto limit = std::min(state.weight.rows(), state.weight.cols());
  if (cfg.rank > limit) {
    throw std::invalid_argument("config error: rank " + std::to_string(cfg.rank) +
                                " exceeds min(m, n) = " + std::to_string(limit));
  }
}

Matrix project_basis(const Matrix& g_tall, const OptimizerConfig& cfg,
                     std::uint64_t stream_seed) {
  if (cfg.projector == Projector::TruncatedSvd) {
    return truncated_svd_projector(g_tall, cfg.rank);
  }
  // Oversampling is clamped so small layers keep working with the defaults.
  const int headroom =
      static_cast<int>(std::min(g_tall.rows(), g_tall.cols())) - cfg.rank;
  return randomized_svd_projector(g_tall, cfg.rank, std::min(cfg.oversampling, headroom),
                                  cfg.power_iterations, stream_seed);
}

bool refresh_due(const LayerState& state, const Matrix& g_tall, const OptimizerConfig& cfg) {
  if (!state.subspace.has_value()) return true;
  if (cfg.refresh_criterion == RefreshCriterion::EveryK) {
    return state.step % cfg.subspace_update_every == 0;
  }
  const double projected = (state.subspace->transpose() * g_tall).norm();
  return projected <= cfg.refresh_grad_threshold;
}

Matrix orthogonalize_moment(const Matrix& moment, const OptimizerConfig& cfg) {
  if (moment.norm() == 0.0) {
    // A vanished moment contributes no orthogonal channel this step.
    return Matrix::Zero(moment.rows(), moment.cols());
  }
  if (cfg.orthogonalizer == Orthogonalizer::ExactSvd) {
    return orthogonalize_svd(moment);
  }
  return newton_schulz_orthogonalize(moment, cfg.ns_variant);
}

std::optional<double> orthogonalization_estimate(const Matrix& moment,
                                                 const OptimizerConfig& cfg) {
  if (moment.norm() == 0.0) return 0.0;
  if (cfg.orthogonalizer == Orthogonalizer::ExactSvd) return 0.0;
  const double kappa = condition_number_gram(
      moment.rows() <= moment.cols() ? moment : Matrix(moment.transpose()));
  if (std::isinf(kappa)) return std::nullopt;
  const int r = static_cast<int>(std::min(moment.rows(), moment.cols()));
  return newton_schulz_error_bound(kappa, r, cfg.ns_variant.iterations);
}

void accumulate_moment(Matrix& moment, const Matrix& update, const OptimizerConfig& cfg) {
  if (cfg.convex_combination_moment) {
    moment = cfg.moment_decay * moment + (1.0 - cfg.moment_decay) * update;
  } else {
    moment = cfg.moment_decay * moment + update;
  }
}

}  // namespace

std::vector<std::string> validate(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(cfg.scale_factor > 0.0)) throw std::invalid_argument("scale_factor must be positive");
  if (!(cfg.moment_decay >= 0.0 && cfg.moment_decay < 1.0)) {
    throw std::invalid_argument("moment_decay must lie in [0, 1)");
  }
  if (cfg.weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
  if (cfg.rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (cfg.subspace_update_every < 1) {
    throw std::invalid_argument("subspace_update_every must be >= 1");
  }
  if (cfg.limiter_enabled && !(cfg.limiter_gamma > 1.0)) {
    throw std::invalid_argument("limiter_gamma must be > 1 when the limiter is enabled");
  }
  if (cfg.ns_variant.iterations < 1) {
    throw std::invalid_argument("newton-schulz iterations must be >= 1");
  }
  if (cfg.oversampling < 0) throw std::invalid_argument("oversampling must be non-negative");
  if (cfg.power_iterations < 0) {
    throw std::invalid_argument("power_iterations must be non-negative");
  }
  if (cfg.refresh_criterion == RefreshCriterion::ProjectedGradNormBelow &&
      !(cfg.refresh_grad_threshold > 0.0)) {
    throw std::invalid_argument("refresh_grad_threshold must be positive");
  }
  std::vector<std::string> warnings;
  if (cfg.moment_decay2.has_value()) {
    warnings.push_back("moment_decay2 is accepted but unused: the update is first-moment-only");
  }
  return warnings;
}

LayerState make_layer_state(Matrix weight, int layer_index) {
  require_finite(weight, "make_layer_state");
  LayerState state;
  state.weight = std::move(weight);
  state.layer_index = layer_index;
  return state;
}

Matrix subspace_transform(const Matrix& moment, const Matrix& q_old, const Matrix& q_new) {
  if (q_old.cols() != q_new.cols() || q_old.rows() != q_new.rows()) {
    throw std::invalid_argument("subspace_transform: basis shapes differ");
  }
  if (moment.rows() != q_old.cols()) {
    throw std::invalid_argument("subspace_transform: moment rows != basis rank");
  }
  return (q_new.transpose() * q_old) * moment;
}

void refresh_subspace(LayerState& state, const Matrix& g, const OptimizerConfig& cfg) {
  require_same_shape(g, state.weight);
  require_finite(g, "refresh_subspace");
  require_rank_fits(state, cfg);

  const bool transposed = stored_transposed(state.weight);
  const Matrix g_tall = transposed ? Matrix(g.transpose()) : g;
  const std::uint64_t stream_seed =
      mix_seed(cfg.seed, static_cast<std::uint64_t>(state.layer_index),
               static_cast<std::uint64_t>(state.step));
  Matrix q_new = project_basis(g_tall, cfg, stream_seed);

  if (state.subspace.has_value()) {
    state.projected_moment = subspace_transform(state.projected_moment, *state.subspace, q_new);
  } else {
    state.projected_moment = Matrix::Zero(cfg.rank, g_tall.cols());
  }
  state.subspace = std::move(q_new);
}

std::pair<Matrix, bool> norm_growth_limit(const Matrix& o,
                                          std::optional<double> previous_norm,
                                          double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("norm_growth_limit: gamma must be > 1");
  if (!previous_norm.has_value()) return {o, false};
  const double norm = o.norm();
  if (norm <= gamma * *previous_norm) return {o, false};
  return {Matrix((o / norm) * (gamma * *previous_norm)), true};
}

StepReport sumo_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg,
                     StepCapture* capture) {
  require_same_shape(g, state.weight);
  require_finite(g, "sumo_step");
  require_rank_fits(state, cfg);

  StepReport report;
  report.grad_norm = g.norm();

  const bool transposed = stored_transposed(state.weight);
  const Matrix g_tall = transposed ? Matrix(g.transpose()) : g;

  if (refresh_due(state, g_tall, cfg)) {
    refresh_subspace(state, g, cfg);
    report.subspace_refreshed = true;
  }
  const Matrix& q = *state.subspace;

  const Matrix g_hat = q.transpose() * g_tall;
  report.projected_grad_norm = g_hat.norm();

  accumulate_moment(state.projected_moment, g_hat, cfg);

  Matrix o = orthogonalize_moment(state.projected_moment, cfg);
  report.orthogonalization_error_estimate = orthogonalization_estimate(state.projected_moment, cfg);
  if (cfg.limiter_enabled) {
    auto [limited, fired] = norm_growth_limit(o, state.previous_update_norm, cfg.limiter_gamma);
    o = std::move(limited);
    report.limiter_fired = fired;
  }

  const double rms =
      cfg.rms_scaling ? std::sqrt(static_cast<double>(std::max(g.rows(), g.cols()))) : 1.0;
  // G - Q (G_hat - s O), which equals (G - Q Q^T G) + s Q O.
  const Matrix update_tall = g_tall - q * (g_hat - rms * o);

  Matrix w_tall = transposed ? Matrix(state.weight.transpose()) : state.weight;
  w_tall = (1.0 - cfg.learning_rate * cfg.weight_decay) * w_tall -
           (cfg.scale_factor * cfg.learning_rate) * update_tall;
  Matrix new_weight = transposed ? Matrix(w_tall.transpose()) : std::move(w_tall);
  report.update_norm = (new_weight - state.weight).norm();
  state.weight = std::move(new_weight);

  const double o_norm = o.norm();
  if (o_norm > 0.0) state.previous_update_norm = o_norm;
  state.step += 1;

  if (capture != nullptr) {
    capture->gradient = g_tall;
    capture->subspace = q;
    capture->projected_gradient = g_hat;
    capture->orthogonalized = std::move(o);
  }
  return report;
}

StepReport muon_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg) {
  require_same_shape(g, state.weight);
  require_finite(g, "muon_step");
  if (state.subspace.has_value()) {
    throw std::invalid_argument("muon_step: state carries a subspace; expected full-rank state");
  }
  if (state.projected_moment.size() == 0) {
    state.projected_moment = Matrix::Zero(g.rows(), g.cols());
  } else if (state.projected_moment.rows() != g.rows() ||
             state.projected_moment.cols() != g.cols()) {
    throw std::invalid_argument("muon_step: moment shape does not match gradient");
  }

  StepReport report;
  report.grad_norm = g.norm();
  report.projected_grad_norm = report.grad_norm;

  accumulate_moment(state.projected_moment, g, cfg);
  const Matrix o = orthogonalize_moment(state.projected_moment, cfg);
  report.orthogonalization_error_estimate = orthogonalization_estimate(state.projected_moment, cfg);

  const Matrix new_weight =
      (1.0 - cfg.learning_rate * cfg.weight_decay) * state.weight - cfg.learning_rate * o;
  report.update_norm = (new_weight - state.weight).norm();
  state.weight = new_weight;

  const double o_norm = o.norm();
  if (o_norm > 0.0) state.previous_update_norm = o_norm;
  state.step += 1;
  return report;
}

StepReport lowrank_momentum_step(LayerState& state, const Matrix& g,
                                 const OptimizerConfig& cfg) {
  require_same_shape(g, state.weight);
  require_finite(g, "lowrank_momentum_step");
  require_rank_fits(state, cfg);

  StepReport report;
  report.grad_norm = g.norm();

  const bool transposed = stored_transposed(state.weight);
  const Matrix g_tall = transposed ? Matrix(g.transpose()) : g;

  if (refresh_due(state, g_tall, cfg)) {
    refresh_subspace(state, g, cfg);
    report.subspace_refreshed = true;
  }
  const Matrix& q = *state.subspace;

  const Matrix g_hat = q.transpose() * g_tall;
  report.projected_grad_norm = g_hat.norm();
  accumulate_moment(state.projected_moment, g_hat, cfg);

  const Matrix update_tall = q * state.projected_moment;
  Matrix w_tall = transposed ? Matrix(state.weight.transpose()) : state.weight;
  w_tall = (1.0 - cfg.learning_rate * cfg.weight_decay) * w_tall -
           (cfg.scale_factor * cfg.learning_rate) * update_tall;
  Matrix new_weight = transposed ? Matrix(w_tall.transpose()) : std::move(w_tall);
  report.update_norm = (new_weight - state.weight).norm();
  state.weight = std::move(new_weight);
  state.step += 1;
  return report;
}

StepReport gd_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg) {
  require_same_shape(g, state.weight);
  require_finite(g, "gd_step");
  require_rank_fits(state, cfg);

  StepReport report;
  report.grad_norm = g.norm();

  const bool transposed = stored_transposed(state.weight);
  const Matrix g_tall = transposed ? Matrix(g.transpose()) : g;
  if (refresh_due(state, g_tall, cfg)) {
    refresh_subspace(state, g, cfg);
    report.subspace_refreshed = true;
  }
  const Matrix g_hat = state.subspace->transpose() * g_tall;
  report.projected_grad_norm = g_hat.norm();
  accumulate_moment(state.projected_moment, g_hat, cfg);

  const Matrix new_weight =
      (1.0 - cfg.learning_rate * cfg.weight_decay) * state.weight - cfg.learning_rate * g;
  report.update_norm = (new_weight - state.weight).norm();
  state.weight = new_weight;
  state.step += 1;
  return report;
}

std::int64_t optimizer_state_memory(std::int64_t m, std::int64_t n, std::int64_t r,
                                    MemoryMethod method) {
  if (m < n) throw std::invalid_argument("optimizer_state_memory: expects m >= n");
  if (n < 1 || r < 1) throw std::invalid_argument("optimizer_state_memory: n and r must be >= 1");
  switch (method) {
    case MemoryMethod::Sumo: return n * r + m * r;
    case MemoryMethod::Adam: return 2 * m * n;
    case MemoryMethod::Shampoo: return m * m + n * n;
    case MemoryMethod::Soap: return 2 * m * n + 2 * m * m + 2 * n * n;
    case MemoryMethod::Galore: return 2 * n * r + m * r;
  }
  throw std::invalid_argument("optimizer_state_memory: unknown method");
}

}  // namespace sumo
