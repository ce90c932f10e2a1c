#include "sumo/models.hpp"

#include <cmath>
#include <stdexcept>

namespace sumo {

namespace {

Matrix columns(const Matrix& a, std::span<const int> idx) {
  if (idx.empty()) return a;
  Matrix out(a.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = a.col(idx[j]);
  }
  return out;
}

std::vector<int> picked_labels(const std::vector<int>& labels, std::span<const int> idx) {
  if (idx.empty()) return labels;
  std::vector<int> out(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = labels[static_cast<std::size_t>(idx[j])];
  return out;
}

/// Column-wise softmax probabilities of the logits, computed stably.
Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double peak = p.col(j).maxCoeff();
    p.col(j) = (p.col(j).array() - peak).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

const ToyModel::Layer& single_linear_layer(const ToyModel& model, const char* family) {
  if (model.layers.size() != 1 || model.layers[0].activation != Activation::Linear) {
    throw std::invalid_argument(std::string(family) + ": expects a single linear layer");
  }
  return model.layers[0];
}

struct MlpLayers {
  const ToyModel::Layer* hidden;
  const ToyModel::Layer* head;
};

MlpLayers mlp_layers(const ToyModel& model) {
  if (model.layers.size() != 2 || model.layers[0].activation != Activation::Relu ||
      model.layers[1].activation != Activation::SoftmaxCrossEntropyHead) {
    throw std::invalid_argument("classification model: expects relu layer + softmax head");
  }
  return {&model.layers[0], &model.layers[1]};
}

}  // namespace

Dataset DataGenerator::generate() const {
  switch (kind) {
    case Kind::LinearRegression: {
      if (rows < 1 || cols < 1 || samples < 1) {
        throw std::invalid_argument("linear_regression: rows, cols, samples must be >= 1");
      }
      GaussianStream rng(mix_seed(seed, 0x11));
      LinearRegressionData d;
      const Matrix truth = rng.matrix(rows, cols);
      d.inputs = rng.matrix(cols, samples);
      d.targets = truth * d.inputs;
      if (noise_sigma > 0.0) {
        d.targets += noise_sigma * rng.matrix(rows, samples);
      }
      return d;
    }
    case Kind::IllConditionedQuadratic: {
      if (rows < 1 || cols < 1) {
        throw std::invalid_argument("ill_conditioned_quadratic: rows, cols must be >= 1");
      }
      if (!(spectrum_min > 0.0) || spectrum_max < spectrum_min) {
        throw std::invalid_argument("ill_conditioned_quadratic: need 0 < spectrum_min <= spectrum_max");
      }
      GaussianStream rng(mix_seed(seed, 0x22));
      QuadraticData d;
      // Log-spaced spectrum on a random orthogonal frame.
      Vector spectrum(rows);
      const double lo = std::log(spectrum_min);
      const double hi = std::log(spectrum_max);
      for (int i = 0; i < rows; ++i) {
        const double t = rows == 1 ? 0.0 : static_cast<double>(i) / (rows - 1);
        spectrum(i) = std::exp(lo + t * (hi - lo));
      }
      Eigen::HouseholderQR<Matrix> qr(rng.matrix(rows, rows));
      const Matrix frame = qr.householderQ() * Matrix::Identity(rows, rows);
      const Matrix raw = frame * spectrum.asDiagonal() * frame.transpose();
      d.metric = 0.5 * (raw + raw.transpose());  // exact symmetry
      d.target = rng.matrix(rows, cols);
      return d;
    }
    case Kind::SyntheticClassification: {
      if (dims < 1 || classes < 2 || samples < classes) {
        throw std::invalid_argument("synthetic_classification: need dims >= 1, classes >= 2, samples >= classes");
      }
      GaussianStream rng(mix_seed(seed, 0x33));
      ClassificationData d;
      d.classes = classes;
      const Matrix centers = 2.0 * rng.matrix(dims, classes);
      d.inputs.resize(dims, samples);
      d.labels.resize(static_cast<std::size_t>(samples));
      for (int j = 0; j < samples; ++j) {
        const int label = j % classes;  // balanced classes
        d.labels[static_cast<std::size_t>(j)] = label;
        d.inputs.col(j) = centers.col(label) + rng.matrix(dims, 1);
      }
      return d;
    }
  }
  throw std::invalid_argument("DataGenerator: unknown kind");
}

ToyModel make_model(const ModelDescriptor& descriptor, const Dataset& data, std::uint64_t seed) {
  GaussianStream rng(mix_seed(seed, 0x44));
  ToyModel model;
  if (descriptor.kind == ModelDescriptor::Kind::Linear) {
    Eigen::Index rows = 0, cols = 0;
    if (const auto* lin = std::get_if<LinearRegressionData>(&data)) {
      rows = lin->targets.rows();
      cols = lin->inputs.rows();
    } else if (const auto* quad = std::get_if<QuadraticData>(&data)) {
      rows = quad->target.rows();
      cols = quad->target.cols();
    } else {
      throw std::invalid_argument("linear model requires regression or quadratic data");
    }
    model.layers.push_back({descriptor.init_scale * rng.matrix(rows, cols), Activation::Linear});
    return model;
  }
  const auto* cls = std::get_if<ClassificationData>(&data);
  if (cls == nullptr) {
    throw std::invalid_argument("mlp model requires classification data");
  }
  if (descriptor.hidden < 1) throw std::invalid_argument("mlp model: hidden must be >= 1");
  model.layers.push_back(
      {descriptor.init_scale * rng.matrix(descriptor.hidden, cls->inputs.rows()), Activation::Relu});
  model.layers.push_back({descriptor.init_scale * rng.matrix(cls->classes, descriptor.hidden),
                          Activation::SoftmaxCrossEntropyHead});
  return model;
}

int sample_count(const Dataset& data) {
  if (const auto* lin = std::get_if<LinearRegressionData>(&data)) {
    return static_cast<int>(lin->inputs.cols());
  }
  if (std::holds_alternative<QuadraticData>(data)) return 1;  // deterministic objective
  return static_cast<int>(std::get<ClassificationData>(data).inputs.cols());
}

double loss(const ToyModel& model, const Dataset& data, std::span<const int> batch) {
  if (const auto* lin = std::get_if<LinearRegressionData>(&data)) {
    const auto& layer = single_linear_layer(model, "linear_regression");
    const Matrix x = columns(lin->inputs, batch);
    const Matrix y = columns(lin->targets, batch);
    const Matrix resid = layer.weight * x - y;
    return 0.5 * resid.squaredNorm() / static_cast<double>(x.cols());
  }
  if (const auto* quad = std::get_if<QuadraticData>(&data)) {
    const auto& layer = single_linear_layer(model, "quadratic");
    const Matrix d = layer.weight - quad->target;
    return 0.5 * (d.transpose() * quad->metric * d).trace();
  }
  const auto& cls = std::get<ClassificationData>(data);
  const auto layers = mlp_layers(model);
  const Matrix x = columns(cls.inputs, batch);
  const std::vector<int> labels = picked_labels(cls.labels, batch);
  const Matrix hidden = (layers.hidden->weight * x).cwiseMax(0.0);
  const Matrix p = softmax(layers.head->weight * hidden);
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    total -= std::log(std::max(p(labels[static_cast<std::size_t>(j)], j), 1e-300));
  }
  return total / static_cast<double>(p.cols());
}

std::vector<Matrix> gradients(const ToyModel& model, const Dataset& data,
                              std::span<const int> batch) {
  if (const auto* lin = std::get_if<LinearRegressionData>(&data)) {
    const auto& layer = single_linear_layer(model, "linear_regression");
    const Matrix x = columns(lin->inputs, batch);
    const Matrix y = columns(lin->targets, batch);
    const Matrix resid = layer.weight * x - y;
    return {Matrix(resid * x.transpose() / static_cast<double>(x.cols()))};
  }
  if (const auto* quad = std::get_if<QuadraticData>(&data)) {
    const auto& layer = single_linear_layer(model, "quadratic");
    return {Matrix(quad->metric * (layer.weight - quad->target))};
  }
  const auto& cls = std::get<ClassificationData>(data);
  const auto layers = mlp_layers(model);
  const Matrix x = columns(cls.inputs, batch);
  const std::vector<int> labels = picked_labels(cls.labels, batch);
  const double inv_n = 1.0 / static_cast<double>(x.cols());

  const Matrix pre = layers.hidden->weight * x;
  const Matrix hidden = pre.cwiseMax(0.0);
  Matrix dlogits = softmax(layers.head->weight * hidden);
  for (Eigen::Index j = 0; j < dlogits.cols(); ++j) {
    dlogits(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  }
  dlogits *= inv_n;

  const Matrix grad_head = dlogits * hidden.transpose();
  Matrix dhidden = layers.head->weight.transpose() * dlogits;
  dhidden = (pre.array() > 0.0).select(dhidden, 0.0);
  const Matrix grad_hidden = dhidden * x.transpose();
  return {grad_hidden, grad_head};
}

}  // namespace sumo
