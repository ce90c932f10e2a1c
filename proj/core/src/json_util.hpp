#pragma once

// Internal JSON conversions shared by checkpoint and experiment I/O.
// nlohmann::json emits the shortest decimal that parses back to the same
// double, so matrices and scalars round-trip bit-exactly through these.

#include <json.hpp>

#include "sumo/harness.hpp"
#include "sumo/matrix.hpp"
#include "sumo/optimizer.hpp"

namespace sumo::detail {

nlohmann::json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const OptimizerConfig& cfg);
OptimizerConfig config_from_json(const nlohmann::json& j);

nlohmann::json layer_state_to_json(const LayerState& state);
LayerState layer_state_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

std::string algorithm_to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

}  // namespace sumo::detail
