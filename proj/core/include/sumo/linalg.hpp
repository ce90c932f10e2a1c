#pragma once

#include <cstdint>

#include "sumo/matrix.hpp"

namespace sumo {

/// Thin SVD factors a = u * diag(singular_values) * v^T with k = min(rows, cols),
/// u (m x k) and v (n x k) having orthonormal columns and singular values
/// sorted non-increasing.
struct SvdFactors {
  Matrix u;
  Vector singular_values;
  Matrix v;

  Matrix reconstruct() const { return u * singular_values.asDiagonal() * v.transpose(); }
};

enum class NewtonSchulzKind {
  /// X <- 1.5 X - 0.5 X X^T X, started at X0 = m / ||m||_2. Quadratically
  /// convergent toward the polar factor; the variant the error bound covers.
  Classic,
  /// Quintic iteration with coefficients (3.4445, -4.7750, 2.0315), started at
  /// X0 = m / ||m||_F. Overshoots the unit spectrum by design (<= ~1.3).
  MuonQuintic,
};

struct NewtonSchulzVariant {
  NewtonSchulzKind kind = NewtonSchulzKind::Classic;
  int iterations = 5;
};

/// Dense thin SVD. Input must be finite. Residual ||a - USV^T||_F stays below
/// 1e-8 * max(1, ||a||_F).
SvdFactors svd(const Matrix& a);

/// Nearest (semi-)orthogonal matrix in Frobenius norm: U V^T from the thin SVD.
/// Satisfies O O^T = I when rows <= cols, O^T O = I otherwise.
/// Throws on a zero matrix; callers that want O = 0 for a vanished moment
/// handle that case themselves.
Matrix orthogonalize_svd(const Matrix& m);

/// Iterative approximation of the polar factor, without any SVD.
Matrix newton_schulz_orthogonalize(const Matrix& m, const NewtonSchulzVariant& variant);

/// sqrt(r) * (1 - 1/kappa)^(2^iterations): the error bound for the classic
/// iteration on a matrix whose Gram condition number is kappa and whose
/// spectral structure has r participating directions.
double newton_schulz_error_bound(double kappa, int r, int iterations);

/// Leading r left singular vectors of g (rows x r), orthonormal columns.
Matrix truncated_svd_projector(const Matrix& g, int r);

/// Randomized range finder: Gaussian sketch, optional power iterations with QR
/// re-orthonormalization, then the leading r directions of the sketched range.
/// Deterministic given the seed.
Matrix randomized_svd_projector(const Matrix& g, int r, int oversampling,
                                int power_iterations, std::uint64_t seed);

/// sigma_max(a a^T) / sigma_min(a a^T); +infinity when the Gram matrix is
/// singular (including rows > cols). Throws on a zero matrix.
double condition_number_gram(const Matrix& a);

/// Relative Frobenius error of the best rank-one approximation:
/// (||m||_F^2 - sigma_1^2) / ||m||_F^2, in [0, 1]. Throws on a zero matrix.
double rank_one_relative_error(const Matrix& m);

/// Spectral norm via power iteration on the smaller Gram matrix
/// (30 steps, tolerance 1e-10).
double spectral_norm_estimate(const Matrix& a);

/// FLOP model for the SVD-pseudoinverse route on an n x m problem:
/// 4nm^2 + 8m^3 for the decomposition plus mn^2 + m^2n for the multiplies.
std::int64_t flops_svd_pseudoinverse(std::int64_t n, std::int64_t m);
std::int64_t flops_svd_decomposition(std::int64_t n, std::int64_t m);
std::int64_t flops_svd_apply(std::int64_t n, std::int64_t m);

/// FLOP model for the Newton-Schulz route: nm^2 + m^2n to form and apply the
/// Gram product plus iterations * (4m^3 + 2m^2) for the iterations themselves.
std::int64_t flops_newton_schulz(std::int64_t n, std::int64_t m, std::int64_t iterations = 5);

}  // namespace sumo
