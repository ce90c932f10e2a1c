#include "sumo/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json_util.hpp"

namespace sumo {

namespace detail {

nlohmann::json matrix_to_json(const Matrix& a) {
  nlohmann::json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  auto& data = j["data"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) data.push_back(a(i, k));
  }
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix_from_json: inconsistent dimensions");
  }
  Matrix a(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = data[idx++].get<double>();
  }
  return a;
}

nlohmann::json layer_state_to_json(const LayerState& state) {
  nlohmann::json j;
  j["layer_index"] = state.layer_index;
  j["step"] = state.step;
  j["weight"] = matrix_to_json(state.weight);
  j["projected_moment"] = matrix_to_json(state.projected_moment);
  if (state.subspace.has_value()) j["subspace"] = matrix_to_json(*state.subspace);
  if (state.previous_update_norm.has_value()) {
    j["previous_update_norm"] = *state.previous_update_norm;
  }
  return j;
}

LayerState layer_state_from_json(const nlohmann::json& j) {
  LayerState state;
  state.layer_index = j.at("layer_index").get<int>();
  state.step = j.at("step").get<std::int64_t>();
  state.weight = matrix_from_json(j.at("weight"));
  state.projected_moment = matrix_from_json(j.at("projected_moment"));
  if (j.contains("subspace")) state.subspace = matrix_from_json(j.at("subspace"));
  if (j.contains("previous_update_norm")) {
    state.previous_update_norm = j.at("previous_update_norm").get<double>();
  }
  return state;
}

}  // namespace detail

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& file) {
  nlohmann::json j;
  j["format"] = "sumo-checkpoint";
  j["version"] = 1;
  j["config"] = detail::config_to_json(checkpoint.config);
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& state : checkpoint.layers) {
    layers.push_back(detail::layer_state_to_json(state));
  }
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + file.string());
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + file.string());
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "sumo-checkpoint") {
    throw std::invalid_argument("load_checkpoint: not a checkpoint file");
  }
  Checkpoint checkpoint;
  checkpoint.config = detail::config_from_json(j.at("config"));
  for (const auto& layer : j.at("layers")) {
    checkpoint.layers.push_back(detail::layer_state_from_json(layer));
  }
  return checkpoint;
}

}  // namespace sumo
