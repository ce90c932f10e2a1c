#include <doctest.h>

#include <cmath>

#include "sumo/models.hpp"
#include "test_support.hpp"

using sumo::Matrix;

namespace {

/// Central finite differences on one layer, step 1e-6.
Matrix finite_difference_gradient(sumo::ToyModel model, const sumo::Dataset& data,
                                  std::size_t layer) {
  constexpr double kStep = 1e-6;
  Matrix grad(model.layers[layer].weight.rows(), model.layers[layer].weight.cols());
  for (Eigen::Index i = 0; i < grad.rows(); ++i) {
    for (Eigen::Index j = 0; j < grad.cols(); ++j) {
      const double saved = model.layers[layer].weight(i, j);
      model.layers[layer].weight(i, j) = saved + kStep;
      const double up = sumo::loss(model, data);
      model.layers[layer].weight(i, j) = saved - kStep;
      const double down = sumo::loss(model, data);
      model.layers[layer].weight(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * kStep);
    }
  }
  return grad;
}

void check_gradients_match(const sumo::ToyModel& model, const sumo::Dataset& data) {
  const auto grads = sumo::gradients(model, data);
  REQUIRE(grads.size() == model.layers.size());
  for (std::size_t l = 0; l < grads.size(); ++l) {
    const Matrix fd = finite_difference_gradient(model, data, l);
    CHECK((grads[l] - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

}  // namespace

TEST_CASE("data generators are deterministic and shaped as declared") {
  sumo::DataGenerator gen;
  gen.kind = sumo::DataGenerator::Kind::LinearRegression;
  gen.rows = 6;
  gen.cols = 4;
  gen.samples = 20;
  gen.noise_sigma = 0.1;
  gen.seed = 5;
  const auto a = std::get<sumo::LinearRegressionData>(gen.generate());
  const auto b = std::get<sumo::LinearRegressionData>(gen.generate());
  CHECK(a.inputs.rows() == 4);
  CHECK(a.inputs.cols() == 20);
  CHECK(a.targets.rows() == 6);
  CHECK((a.inputs - b.inputs).norm() == 0.0);
  CHECK((a.targets - b.targets).norm() == 0.0);

  sumo::DataGenerator quad;
  quad.kind = sumo::DataGenerator::Kind::IllConditionedQuadratic;
  quad.rows = 5;
  quad.cols = 3;
  quad.spectrum_min = 1.0;
  quad.spectrum_max = 100.0;
  quad.seed = 6;
  const auto q = std::get<sumo::QuadraticData>(quad.generate());
  CHECK(q.metric.rows() == 5);
  CHECK((q.metric - q.metric.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q.metric);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(100.0).epsilon(1e-9));

  sumo::DataGenerator cls;
  cls.kind = sumo::DataGenerator::Kind::SyntheticClassification;
  cls.dims = 3;
  cls.classes = 4;
  cls.samples = 40;
  cls.seed = 7;
  const auto c = std::get<sumo::ClassificationData>(cls.generate());
  CHECK(c.inputs.cols() == 40);
  std::vector<int> counts(4, 0);
  for (const int label : c.labels) counts[static_cast<std::size_t>(label)]++;
  for (const int count : counts) CHECK(count == 10);
}

TEST_CASE("linear regression gradients") {
  SUBCASE("zero residual data has zero gradient at the generating weight") {
    sumo::GaussianStream rng(301);
    const Matrix truth = rng.matrix(4, 3);
    sumo::LinearRegressionData data;
    data.inputs = rng.matrix(3, 12);
    data.targets = truth * data.inputs;
    sumo::ToyModel model;
    model.layers.push_back({truth, sumo::Activation::Linear});
    CHECK(sumo::loss(model, data) <= 1e-20);
    CHECK(sumo::gradients(model, data)[0].norm() <= 1e-12);
  }
  SUBCASE("matches finite differences") {
    sumo::DataGenerator gen;
    gen.kind = sumo::DataGenerator::Kind::LinearRegression;
    gen.rows = 5;
    gen.cols = 4;
    gen.samples = 16;
    gen.noise_sigma = 0.3;
    gen.seed = 9;
    const auto data = gen.generate();
    const auto model = sumo::make_model({sumo::ModelDescriptor::Kind::Linear, 0, 0.5}, data, 10);
    check_gradients_match(model, data);
  }
}

TEST_CASE("quadratic gradients are exact") {
  sumo::DataGenerator gen;
  gen.kind = sumo::DataGenerator::Kind::IllConditionedQuadratic;
  gen.rows = 4;
  gen.cols = 3;
  gen.spectrum_min = 1.0;
  gen.spectrum_max = 50.0;
  gen.seed = 11;
  const auto data = gen.generate();
  const auto& quad = std::get<sumo::QuadraticData>(data);
  auto model = sumo::make_model({sumo::ModelDescriptor::Kind::Linear, 0, 1.0}, data, 12);

  const Matrix expected = quad.metric * (model.layers[0].weight - quad.target);
  CHECK((sumo::gradients(model, data)[0] - expected).norm() == 0.0);
  check_gradients_match(model, data);

  model.layers[0].weight = quad.target;
  CHECK(sumo::gradients(model, data)[0].norm() == 0.0);
  CHECK(sumo::loss(model, data) <= 1e-20);
}

TEST_CASE("mlp gradients match finite differences") {
  sumo::DataGenerator gen;
  gen.kind = sumo::DataGenerator::Kind::SyntheticClassification;
  gen.dims = 5;
  gen.classes = 3;
  gen.samples = 12;
  gen.seed = 13;
  const auto data = gen.generate();
  const auto model = sumo::make_model({sumo::ModelDescriptor::Kind::Mlp, 7, 0.4}, data, 14);
  check_gradients_match(model, data);

  SUBCASE("single sample batches too") {
    const int idx[] = {3};
    const auto grads = sumo::gradients(model, data, idx);
    sumo::ToyModel probe = model;
    constexpr double kStep = 1e-6;
    const double saved = probe.layers[1].weight(0, 0);
    probe.layers[1].weight(0, 0) = saved + kStep;
    const double up = sumo::loss(probe, data, idx);
    probe.layers[1].weight(0, 0) = saved - kStep;
    const double down = sumo::loss(probe, data, idx);
    CHECK(grads[1](0, 0) == doctest::Approx((up - down) / (2 * kStep)).epsilon(1e-5));
  }
}

TEST_CASE("model construction validates shapes") {
  sumo::DataGenerator gen;
  gen.kind = sumo::DataGenerator::Kind::SyntheticClassification;
  gen.dims = 4;
  gen.classes = 3;
  gen.samples = 9;
  gen.seed = 15;
  const auto data = gen.generate();
  CHECK_THROWS_AS(sumo::make_model({sumo::ModelDescriptor::Kind::Linear, 0, 0.1}, data, 1),
                  std::invalid_argument);
  const auto model = sumo::make_model({sumo::ModelDescriptor::Kind::Mlp, 6, 0.1}, data, 1);
  CHECK(model.layers.size() == 2);
  CHECK(model.layers[0].weight.rows() == 6);
  CHECK(model.layers[0].weight.cols() == 4);
  CHECK(model.layers[1].weight.rows() == 3);
  CHECK(model.layers[1].weight.cols() == 6);
}
