// Timing the two orthogonalization routes on projected-moment shapes,
// alongside the subspace projectors that feed them.

#include <benchmark/benchmark.h>

#include "sumo/linalg.hpp"

namespace {

sumo::Matrix moment_like(int rows, int cols, double condition) {
  sumo::GaussianStream rng(0xbe9c4);
  Eigen::HouseholderQR<sumo::Matrix> qu(rng.matrix(rows, rows));
  const sumo::Matrix u = qu.householderQ() * sumo::Matrix::Identity(rows, rows);
  Eigen::HouseholderQR<sumo::Matrix> qv(rng.matrix(cols, cols));
  const sumo::Matrix v = (qv.householderQ() * sumo::Matrix::Identity(cols, cols)).leftCols(rows);
  sumo::Vector s(rows);
  for (int i = 0; i < rows; ++i) {
    const double t = rows == 1 ? 1.0 : static_cast<double>(i) / (rows - 1);
    s(i) = std::pow(1.0 / std::sqrt(condition), t);
  }
  return u * s.asDiagonal() * v.transpose();
}

void OrthogonalizeExactSvd(benchmark::State& state) {
  const auto m = moment_like(static_cast<int>(state.range(0)), 1024, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sumo::orthogonalize_svd(m));
  }
}
BENCHMARK(OrthogonalizeExactSvd)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void OrthogonalizeNewtonSchulzClassic(benchmark::State& state) {
  const auto m = moment_like(static_cast<int>(state.range(0)), 1024, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sumo::newton_schulz_orthogonalize(m, {sumo::NewtonSchulzKind::Classic, 5}));
  }
}
BENCHMARK(OrthogonalizeNewtonSchulzClassic)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void OrthogonalizeNewtonSchulzQuintic(benchmark::State& state) {
  const auto m = moment_like(static_cast<int>(state.range(0)), 1024, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sumo::newton_schulz_orthogonalize(m, {sumo::NewtonSchulzKind::MuonQuintic, 5}));
  }
}
BENCHMARK(OrthogonalizeNewtonSchulzQuintic)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void TruncatedSvdProjector(benchmark::State& state) {
  sumo::GaussianStream rng(0x9a7);
  const sumo::Matrix g = rng.matrix(1024, static_cast<Eigen::Index>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sumo::truncated_svd_projector(g, 8));
  }
}
BENCHMARK(TruncatedSvdProjector)->Arg(64)->Arg(128)->Arg(256);

void RandomizedSvdProjector(benchmark::State& state) {
  sumo::GaussianStream rng(0x9a7);
  const sumo::Matrix g = rng.matrix(1024, static_cast<Eigen::Index>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sumo::randomized_svd_projector(g, 8, 4, 2, seed++));
  }
}
BENCHMARK(RandomizedSvdProjector)->Arg(64)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
