#include "sumo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace sumo {

namespace {

// BDCSVD pays off only once the small dimension is nontrivial; Jacobi is the
// more accurate choice for the tiny factors this toolkit mostly sees.
constexpr Eigen::Index kJacobiCutoff = 32;

Matrix thin_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  const Eigen::Index k = std::min(a.rows(), a.cols());
  return Matrix(qr.householderQ() * Matrix::Identity(a.rows(), k));
}

}  // namespace

SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd");
  if (a.size() == 0) throw std::invalid_argument("svd: empty matrix");
  constexpr unsigned opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  SvdFactors f;
  if (std::min(a.rows(), a.cols()) <= kJacobiCutoff) {
    Eigen::JacobiSVD<Matrix> dec(a, opts);
    f.u = dec.matrixU();
    f.singular_values = dec.singularValues();
    f.v = dec.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> dec(a, opts);
    f.u = dec.matrixU();
    f.singular_values = dec.singularValues();
    f.v = dec.matrixV();
  }
  return f;
}

Matrix orthogonalize_svd(const Matrix& m) {
  require_finite(m, "orthogonalize_svd");
  require_nonzero(m, "orthogonalize_svd");
  const SvdFactors f = svd(m);
  return f.u * f.v.transpose();
}

double spectral_norm_estimate(const Matrix& a) {
  require_nonzero(a, "spectral_norm_estimate");
  // Power iteration on the smaller of a^T a / a a^T.
  const bool wide = a.rows() >= a.cols();
  const Matrix gram = wide ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  Vector v = Vector::Ones(gram.rows());
  v.normalize();
  double value = 0.0;
  for (int i = 0; i < 30; ++i) {
    Vector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = norm;  // Rayleigh estimate of sigma_max(gram)
    if (std::abs(next - value) <= 1e-10 * std::max(1.0, next)) {
      value = next;
      break;
    }
    value = next;
    v = w;
  }
  return std::sqrt(value);
}

Matrix newton_schulz_orthogonalize(const Matrix& m, const NewtonSchulzVariant& variant) {
  require_finite(m, "newton_schulz_orthogonalize");
  require_nonzero(m, "newton_schulz_orthogonalize");
  if (variant.iterations < 1) {
    throw std::invalid_argument("newton_schulz_orthogonalize: iterations must be >= 1");
  }

  const bool tall = m.rows() > m.cols();
  // Work with rows <= cols so the Gram product X X^T is the small square.
  Matrix x = tall ? m.transpose() : m;

  if (variant.kind == NewtonSchulzKind::Classic) {
    const double sigma = spectral_norm_estimate(x);
    x /= sigma;
    for (int i = 0; i < variant.iterations; ++i) {
      const Matrix gram = x * x.transpose();
      x = 1.5 * x - 0.5 * (gram * x);
    }
  } else {
    constexpr double a = 3.4445;
    constexpr double b = -4.7750;
    constexpr double c = 2.0315;
    x /= x.norm();
    for (int i = 0; i < variant.iterations; ++i) {
      const Matrix gram = x * x.transpose();
      x = a * x + (b * gram + c * (gram * gram)) * x;
    }
  }
  return tall ? Matrix(x.transpose()) : x;
}

double newton_schulz_error_bound(double kappa, int r, int iterations) {
  if (!(kappa >= 1.0)) {
    throw std::invalid_argument("newton_schulz_error_bound: kappa must be >= 1");
  }
  if (r < 1 || iterations < 1) {
    throw std::invalid_argument("newton_schulz_error_bound: r and iterations must be >= 1");
  }
  const double base = 1.0 - 1.0 / kappa;
  return std::sqrt(static_cast<double>(r)) * std::pow(base, std::exp2(iterations));
}

Matrix truncated_svd_projector(const Matrix& g, int r) {
  require_finite(g, "truncated_svd_projector");
  if (r < 1 || r > std::min(g.rows(), g.cols())) {
    throw std::invalid_argument("truncated_svd_projector: rank exceeds matrix dimensions");
  }
  return svd(g).u.leftCols(r);
}

Matrix randomized_svd_projector(const Matrix& g, int r, int oversampling,
                                int power_iterations, std::uint64_t seed) {
  require_finite(g, "randomized_svd_projector");
  if (r < 1 || oversampling < 0 ||
      r + oversampling > std::min(g.rows(), g.cols())) {
    throw std::invalid_argument(
        "randomized_svd_projector: rank + oversampling exceeds matrix dimensions");
  }
  const Eigen::Index k = r + oversampling;
  GaussianStream rng(seed);
  const Matrix sketch = rng.matrix(g.cols(), k);

  Matrix q = thin_q(g * sketch);
  for (int i = 0; i < power_iterations; ++i) {
    q = thin_q(g.transpose() * q);
    q = thin_q(g * q);
  }
  // Rotate the sampled range onto the leading directions of Q^T g.
  const Matrix small = q.transpose() * g;
  return q * svd(small).u.leftCols(r);
}

double condition_number_gram(const Matrix& a) {
  require_finite(a, "condition_number_gram");
  require_nonzero(a, "condition_number_gram");
  if (a.rows() > a.cols()) {
    return std::numeric_limits<double>::infinity();  // Gram matrix is rank deficient
  }
  const Vector s = svd(a).singular_values;
  const double smallest = s(s.size() - 1);
  // Numerical-rank cutoff: below it the Gram matrix is singular in practice.
  const double cutoff = s(0) * std::numeric_limits<double>::epsilon() *
                        static_cast<double>(std::max(a.rows(), a.cols()));
  if (smallest <= cutoff) return std::numeric_limits<double>::infinity();
  const double ratio = s(0) / smallest;
  return ratio * ratio;
}

double rank_one_relative_error(const Matrix& m) {
  require_finite(m, "rank_one_relative_error");
  require_nonzero(m, "rank_one_relative_error");
  const Vector s = svd(m).singular_values;
  const double total = s.squaredNorm();
  const double value = (total - s(0) * s(0)) / total;
  return std::clamp(value, 0.0, 1.0);
}

std::int64_t flops_svd_decomposition(std::int64_t n, std::int64_t m) {
  return 4 * n * m * m + 8 * m * m * m;
}

std::int64_t flops_svd_apply(std::int64_t n, std::int64_t m) {
  return m * n * n + m * m * n;
}

std::int64_t flops_svd_pseudoinverse(std::int64_t n, std::int64_t m) {
  if (n < 1 || m < 1) throw std::invalid_argument("flops_svd_pseudoinverse: dimensions must be >= 1");
  return flops_svd_decomposition(n, m) + flops_svd_apply(n, m);
}

std::int64_t flops_newton_schulz(std::int64_t n, std::int64_t m, std::int64_t iterations) {
  if (n < 1 || m < 1 || iterations < 1) {
    throw std::invalid_argument("flops_newton_schulz: dimensions and iterations must be >= 1");
  }
  return n * m * m + m * m * n + iterations * (4 * m * m * m + 2 * m * m);
}

}  // namespace sumo
