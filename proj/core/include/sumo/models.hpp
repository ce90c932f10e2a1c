#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sumo/matrix.hpp"

namespace sumo {

enum class Activation { Linear, Relu, SoftmaxCrossEntropyHead };

/// Stack of weight matrices with activation tags. Gradients are hand-derived
/// per model family; there is no autodiff here.
struct ToyModel {
  struct Layer {
    Matrix weight;
    Activation activation = Activation::Linear;
  };
  std::vector<Layer> layers;
};

/// y = W* x + noise, inputs n x N, targets m x N. Fit W under mean squared
/// error; the full-batch gradient is (W X - Y) X^T / N.
struct LinearRegressionData {
  Matrix inputs;
  Matrix targets;
};

/// f(W) = 0.5 tr((W - target)^T metric (W - target)) with a PSD metric whose
/// spectrum is the conditioning dial; gradient metric (W - target), exactly.
struct QuadraticData {
  Matrix metric;
  Matrix target;
};

/// Gaussian class blobs, inputs dims x N, integer labels per column.
struct ClassificationData {
  Matrix inputs;
  std::vector<int> labels;
  int classes = 0;
};

using Dataset = std::variant<LinearRegressionData, QuadraticData, ClassificationData>;

/// Declarative, seed-deterministic description of a dataset.
struct DataGenerator {
  enum class Kind { LinearRegression, IllConditionedQuadratic, SyntheticClassification };
  Kind kind = Kind::LinearRegression;

  int rows = 0;  // weight rows (linear regression / quadratic)
  int cols = 0;  // weight cols
  int samples = 0;
  double noise_sigma = 0.0;

  double spectrum_min = 1.0;  // quadratic metric spectrum, log-spaced
  double spectrum_max = 1.0;

  int dims = 0;  // classification input dimension
  int classes = 0;

  std::uint64_t seed = 0;

  Dataset generate() const;
};

struct ModelDescriptor {
  enum class Kind { Linear, Mlp };
  Kind kind = Kind::Linear;
  int hidden = 32;          // MLP hidden width
  double init_scale = 0.1;  // stddev of the Gaussian weight init
};

/// Builds a model with shapes matching the dataset, seeded weight init.
ToyModel make_model(const ModelDescriptor& descriptor, const Dataset& data, std::uint64_t seed);

int sample_count(const Dataset& data);

/// Loss over the given sample indices; an empty span means the full dataset.
double loss(const ToyModel& model, const Dataset& data, std::span<const int> batch = {});

/// Exact per-layer gradients over the given sample indices (empty = full).
std::vector<Matrix> gradients(const ToyModel& model, const Dataset& data,
                              std::span<const int> batch = {});

}  // namespace sumo
