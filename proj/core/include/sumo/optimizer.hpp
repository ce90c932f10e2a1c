#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sumo/linalg.hpp"
#include "sumo/matrix.hpp"

namespace sumo {

enum class Orthogonalizer { ExactSvd, NewtonSchulz };
enum class Projector { TruncatedSvd, RandomizedSvd };
enum class RefreshCriterion { EveryK, ProjectedGradNormBelow };

/// Scalar hyperparameters of the subspace-aware moment-orthogonalization
/// update and its baselines.
struct OptimizerConfig {
  double learning_rate = 1e-3;  // eta
  double scale_factor = 1.0;    // alpha, multiplies the whole update term
  double moment_decay = 0.9;    // beta; the algorithm's mu
  /// Accepted for interface fidelity but unused: the update is
  /// first-moment-only. validate() reports a warning when set.
  std::optional<double> moment_decay2;
  double weight_decay = 0.0;  // lambda
  int rank = 8;               // r
  int subspace_update_every = 200;  // K
  bool limiter_enabled = false;
  double limiter_gamma = 1.1;  // growth threshold, must be > 1 when enabled
  Orthogonalizer orthogonalizer = Orthogonalizer::ExactSvd;
  NewtonSchulzVariant ns_variant{};  // used when orthogonalizer == NewtonSchulz
  Projector projector = Projector::TruncatedSvd;
  int oversampling = 4;
  int power_iterations = 2;
  /// Multiply the orthogonalized channel by sqrt(max(m, n)). The residual
  /// gradient channel is never scaled.
  bool rms_scaling = false;
  /// Accumulate M <- beta M + (1 - beta) G_hat instead of M <- beta M + G_hat.
  /// The two are equivalent up to a learning-rate rescaling eta/(1-beta).
  bool convex_combination_moment = false;
  RefreshCriterion refresh_criterion = RefreshCriterion::EveryK;
  double refresh_grad_threshold = 1e-4;  // varsigma, for ProjectedGradNormBelow
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on inconsistent settings; returns
/// human-readable warnings for accepted-but-ignored fields.
std::vector<std::string> validate(const OptimizerConfig& cfg);

/// Per-layer mutable optimizer state.
///
/// The subspace basis and projected moment are stored in the tall
/// orientation: for an m x n weight with m >= n the basis Q is m x r and the
/// moment M is r x n; when m < n all internal algebra runs on the transpose
/// and Q is n x r, M is r x m. The weight itself always keeps its original
/// orientation.
struct LayerState {
  Matrix weight;
  std::optional<Matrix> subspace;  // Q, absent before the first refresh
  Matrix projected_moment;         // M; empty until the first refresh
  std::optional<double> previous_update_norm;
  std::int64_t step = 0;
  int layer_index = 0;  // distinguishes per-layer RNG streams
};

LayerState make_layer_state(Matrix weight, int layer_index = 0);

/// Telemetry emitted by every step, consumed by the spectral diagnostics.
struct StepReport {
  double grad_norm = 0.0;
  double projected_grad_norm = 0.0;
  double update_norm = 0.0;
  bool limiter_fired = false;
  bool subspace_refreshed = false;
  std::optional<double> orthogonalization_error_estimate;
};

/// Optional per-step snapshot (tall orientation) for verifying the update
/// decomposition identity G - Q(G_hat - O) = (G - Q Q^T G) + Q O.
struct StepCapture {
  Matrix gradient;       // G in tall orientation
  Matrix subspace;       // Q used this step
  Matrix projected_gradient;  // G_hat = Q^T G
  Matrix orthogonalized;      // O after the limiter
};

/// Carries the old projected moment into a new frame: (Q_new^T Q_old) M.
Matrix subspace_transform(const Matrix& moment, const Matrix& q_old, const Matrix& q_new);

/// Recomputes the subspace basis from the configured projector and transforms
/// the moment into it; the moment becomes zero on the first refresh.
void refresh_subspace(LayerState& state, const Matrix& g, const OptimizerConfig& cfg);

/// Norm-growth limiter: rescales o to Frobenius norm gamma * previous_norm
/// when the step-to-step growth ratio exceeds gamma.
std::pair<Matrix, bool> norm_growth_limit(const Matrix& o,
                                          std::optional<double> previous_norm,
                                          double gamma);

/// One update of the subspace-aware moment-orthogonalization algorithm:
/// (maybe) refresh, project, accumulate, orthogonalize, (maybe) limit,
/// then W <- W - alpha eta (G - Q(G_hat - O)) - eta lambda W.
StepReport sumo_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg,
                     StepCapture* capture = nullptr);

/// Muon baseline: full-space moment accumulation, orthogonalization of the
/// whole moment (Newton-Schulz or exact SVD), then W <- W - eta O.
/// The state carries a full-size moment and no subspace.
StepReport muon_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg);

/// Plain low-rank momentum baseline: project, accumulate, map back without
/// orthogonalization: W <- W - alpha eta Q M.
StepReport lowrank_momentum_step(LayerState& state, const Matrix& g,
                                 const OptimizerConfig& cfg);

/// Plain descent W <- W - eta G with the projected moment tracked on the
/// side for spectral diagnostics; the moment never enters the update.
StepReport gd_step(LayerState& state, const Matrix& g, const OptimizerConfig& cfg);

enum class MemoryMethod { Sumo, Adam, Shampoo, Soap, Galore };

/// Optimizer-state element counts for an m x n layer (m >= n) at rank r:
/// Sumo nr + mr, Adam 2mn, Shampoo m^2 + n^2, Soap 2mn + 2m^2 + 2n^2,
/// Galore 2nr + mr.
std::int64_t optimizer_state_memory(std::int64_t m, std::int64_t n, std::int64_t r,
                                    MemoryMethod method);

}  // namespace sumo
