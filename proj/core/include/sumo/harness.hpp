#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sumo/diagnostics.hpp"
#include "sumo/models.hpp"
#include "sumo/optimizer.hpp"

namespace sumo {

enum class Algorithm { Sumo, Muon, LowRankMomentum, Gd };

/// Declarative description of one desk-scale run family. A file-level sweep
/// is a list of these; each is executed once per seed.
struct ExperimentSpec {
  std::string name;
  ModelDescriptor model;
  DataGenerator data;
  Algorithm algorithm = Algorithm::Sumo;
  OptimizerConfig optimizer;
  int step_budget = 1000;
  double grad_tolerance = 1e-3;  // Frobenius norm over all layers
  int batch_size = 0;            // 0 = full batch (exact gradients)
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
};

/// Throws std::invalid_argument naming the offending field.
void validate_spec(const ExperimentSpec& spec);

struct RunResult {
  double final_loss = 0.0;
  std::optional<int> steps_to_grad_tol;
  SpectralTrace trace;  // diagnostics of the first layer
  std::int64_t wall_time_ms = 0;
  bool diverged = false;
  std::optional<int> diverged_step;
  std::vector<LayerState> final_states;
  std::vector<std::string> warnings;
};

/// Trains to the step budget, the gradient tolerance, or divergence
/// (loss above 1e6 or non-finite). Deterministic given (spec, seed).
RunResult run_experiment(const ExperimentSpec& spec, std::uint64_t seed);

std::string algorithm_label(Algorithm a);
std::string orthogonalizer_label(const OptimizerConfig& cfg);

}  // namespace sumo
