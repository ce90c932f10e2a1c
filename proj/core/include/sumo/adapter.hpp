#pragma once

#include <filesystem>

#include "sumo/matrix.hpp"

namespace sumo {

/// Low-rank factorization of a fine-tuning weight delta: delta ~ a * b with
/// a (rows x rank) and b (rank x cols).
struct AdapterBundle {
  Matrix a;
  Matrix b;
  int rank = 0;
  double residual_norm = 0.0;
};

/// Factorizes delta = finetuned - pretrained by truncated SVD, which attains
/// the global optimum of min ||delta - a b||_F at the chosen rank. The rank is
/// the count of singular values above tolerance * sigma_1; a zero delta yields
/// rank 0 and empty factors.
AdapterBundle extract_adapter(const Matrix& finetuned, const Matrix& pretrained,
                              double tolerance);

/// Writes a.json / b.json in the shared matrix format plus metadata.json
/// carrying {rank, residual_norm, tolerance}.
void save_adapter_bundle(const AdapterBundle& bundle, double tolerance,
                         const std::filesystem::path& out_dir);

}  // namespace sumo
