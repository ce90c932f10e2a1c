#include "sumo/adapter.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sumo/linalg.hpp"

namespace sumo {

AdapterBundle extract_adapter(const Matrix& finetuned, const Matrix& pretrained,
                              double tolerance) {
  if (finetuned.rows() != pretrained.rows() || finetuned.cols() != pretrained.cols()) {
    throw std::invalid_argument("extract_adapter: weight shapes differ");
  }
  if (tolerance < 0.0) throw std::invalid_argument("extract_adapter: tolerance must be >= 0");
  require_finite(finetuned, "extract_adapter");
  require_finite(pretrained, "extract_adapter");

  const Matrix delta = finetuned - pretrained;
  AdapterBundle bundle;
  if (delta.norm() == 0.0) {
    bundle.a = Matrix(delta.rows(), 0);
    bundle.b = Matrix(0, delta.cols());
    return bundle;
  }

  const SvdFactors f = svd(delta);
  const double cutoff = tolerance * f.singular_values(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < f.singular_values.size(); ++i) {
    if (f.singular_values(i) > cutoff) ++rank;
  }

  bundle.rank = rank;
  bundle.a = f.u.leftCols(rank) * f.singular_values.head(rank).asDiagonal();
  bundle.b = f.v.leftCols(rank).transpose();
  bundle.residual_norm = (delta - bundle.a * bundle.b).norm();
  return bundle;
}

void save_adapter_bundle(const AdapterBundle& bundle, double tolerance,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_matrix(bundle.a, out_dir / "a.json");
  save_matrix(bundle.b, out_dir / "b.json");
  nlohmann::json meta;
  meta["rank"] = bundle.rank;
  meta["residual_norm"] = bundle.residual_norm;
  meta["tolerance"] = tolerance;
  std::ofstream out(out_dir / "metadata.json");
  if (!out) throw std::runtime_error("save_adapter_bundle: cannot write metadata.json");
  out << meta.dump(2) << "\n";
}

}  // namespace sumo
