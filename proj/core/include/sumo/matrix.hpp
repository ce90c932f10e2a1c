#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace sumo {

/// Dense 2-D real carrier used throughout: weights, gradients, moments,
/// subspace bases and their factors. IEEE double semantics.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// True iff every entry is finite (no NaN/Inf).
bool is_finite(const Matrix& a);

/// Throws std::invalid_argument naming `what` if `a` has non-finite entries.
void require_finite(const Matrix& a, const char* what);

/// Throws std::invalid_argument if `a` is exactly zero (or empty).
void require_nonzero(const Matrix& a, const char* what);

/// Deterministic standard-normal stream: mt19937_64 driving an explicit
/// Box-Muller transform, so sequences do not depend on the standard
/// library's normal_distribution implementation.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next();

  /// rows x cols matrix filled in row-major draw order.
  Matrix matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stateless seed derivation for per-layer / per-step RNG streams
/// (splitmix64 over the mixed words).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Shortest decimal representation that parses back to the same double
/// (std::to_chars). Infinities render as "inf"/"-inf".
std::string format_double(double v);

/// Matrix file format shared by checkpoints, adapter bundles and the CLI:
/// a JSON object {"rows": r, "cols": c, "data": [row-major entries]}.
/// Entries must be finite; load rejects anything else.
void save_matrix(const Matrix& a, const std::filesystem::path& file);
Matrix load_matrix(const std::filesystem::path& file);

}  // namespace sumo
