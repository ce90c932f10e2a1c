#include "sumo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sumo {

namespace {

constexpr double kDivergenceCeiling = 1e6;

std::vector<int> epoch_permutation(int n, std::uint64_t seed, std::int64_t epoch) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 engine(mix_seed(seed, 0xba7c4, static_cast<std::uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(engine() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

/// Without-replacement mini-batch for step t, reshuffled each epoch from the
/// run seed. Stateless in t so a resumed run samples identically.
std::vector<int> batch_for_step(int samples, int batch_size, std::uint64_t seed, std::int64_t t) {
  const int per_epoch = samples / batch_size;
  const std::int64_t epoch = t / per_epoch;
  const int slot = static_cast<int>(t % per_epoch);
  const std::vector<int> perm = epoch_permutation(samples, seed, epoch);
  return std::vector<int>(perm.begin() + static_cast<std::ptrdiff_t>(slot) * batch_size,
                          perm.begin() + static_cast<std::ptrdiff_t>(slot + 1) * batch_size);
}

double total_norm(const std::vector<Matrix>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

StepReport dispatch_step(Algorithm algorithm, LayerState& state, const Matrix& g,
                         const OptimizerConfig& cfg) {
  switch (algorithm) {
    case Algorithm::Sumo: return sumo_step(state, g, cfg);
    case Algorithm::Muon: return muon_step(state, g, cfg);
    case Algorithm::LowRankMomentum: return lowrank_momentum_step(state, g, cfg);
    case Algorithm::Gd: return gd_step(state, g, cfg);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace

void validate_spec(const ExperimentSpec& spec) {
  if (spec.name.empty()) throw std::invalid_argument("spec.name: must not be empty");
  if (spec.step_budget < 1) throw std::invalid_argument("spec.step_budget: must be >= 1");
  if (!(spec.grad_tolerance > 0.0)) {
    throw std::invalid_argument("spec.grad_tolerance: must be positive");
  }
  if (spec.seeds.empty()) throw std::invalid_argument("spec.seeds: must not be empty");
  if (spec.batch_size < 0) throw std::invalid_argument("spec.batch_size: must be >= 0");
  validate(spec.optimizer);

  // Rank must fit every layer the optimizer projects.
  if (spec.algorithm != Algorithm::Muon) {
    const Dataset probe = spec.data.generate();
    const ToyModel model = make_model(spec.model, probe, spec.seeds.front());
    for (const auto& layer : model.layers) {
      const auto limit = std::min(layer.weight.rows(), layer.weight.cols());
      if (spec.optimizer.rank > limit) {
        throw std::invalid_argument(
            "spec.optimizer.rank: rank " + std::to_string(spec.optimizer.rank) +
            " exceeds min(m, n) = " + std::to_string(limit) + " for a layer");
      }
    }
  }
}

RunResult run_experiment(const ExperimentSpec& spec, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();

  RunResult result;
  OptimizerConfig cfg = spec.optimizer;
  result.warnings = validate(cfg);
  cfg.seed = mix_seed(cfg.seed, seed, 0x5eed);

  DataGenerator data_spec = spec.data;
  data_spec.seed = mix_seed(spec.data.seed, seed, 0xda7a);
  const Dataset data = data_spec.generate();

  ToyModel model = make_model(spec.model, data, mix_seed(seed, 0x10d31));

  std::vector<LayerState> states;
  states.reserve(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    states.push_back(make_layer_state(model.layers[i].weight, static_cast<int>(i)));
  }

  const int samples = sample_count(data);
  const bool full_batch = spec.batch_size <= 0 || spec.batch_size >= samples;

  for (int t = 0; t < spec.step_budget; ++t) {
    for (std::size_t i = 0; i < states.size(); ++i) model.layers[i].weight = states[i].weight;

    const double full_loss = loss(model, data);
    const std::vector<Matrix> full_grads = gradients(model, data);

    if (!std::isfinite(full_loss) || full_loss > kDivergenceCeiling) {
      result.diverged = true;
      result.diverged_step = t;
      break;
    }
    if (total_norm(full_grads) <= spec.grad_tolerance) {
      result.steps_to_grad_tol = t;
      break;
    }

    std::vector<Matrix> step_grads;
    if (!full_batch) {
      const std::vector<int> batch = batch_for_step(samples, spec.batch_size, seed, t);
      step_grads = gradients(model, data, batch);
    }
    const std::vector<Matrix>& grads = full_batch ? full_grads : step_grads;

    for (std::size_t i = 0; i < states.size(); ++i) {
      const StepReport report = dispatch_step(spec.algorithm, states[i], grads[i], cfg);
      if (i == 0) record_step(result.trace, states[0], report, full_loss);
    }
  }

  for (std::size_t i = 0; i < states.size(); ++i) model.layers[i].weight = states[i].weight;
  result.final_loss = loss(model, data);
  result.final_states = std::move(states);
  result.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

std::string algorithm_label(Algorithm a) {
  switch (a) {
    case Algorithm::Sumo: return "sumo";
    case Algorithm::Muon: return "muon";
    case Algorithm::LowRankMomentum: return "lowrank_momentum";
    case Algorithm::Gd: return "gd";
  }
  return "unknown";
}

std::string orthogonalizer_label(const OptimizerConfig& cfg) {
  if (cfg.orthogonalizer == Orthogonalizer::ExactSvd) return "exact_svd";
  const char* kind =
      cfg.ns_variant.kind == NewtonSchulzKind::Classic ? "newton_schulz_classic" : "newton_schulz_quintic";
  return std::string(kind) + std::to_string(cfg.ns_variant.iterations);
}

}  // namespace sumo
