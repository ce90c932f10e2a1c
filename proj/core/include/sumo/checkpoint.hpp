#pragma once

#include <filesystem>
#include <vector>

#include "sumo/optimizer.hpp"

namespace sumo {

/// Self-describing optimizer snapshot: the config plus every layer's weight,
/// subspace, projected moment, previous update norm and step counter.
/// Round-trips bit-exactly so a resumed run reproduces the original.
struct Checkpoint {
  OptimizerConfig config;
  std::vector<LayerState> layers;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace sumo
