#include <cmath>

#include "doctest.h"
#include "layersparse/errors.hpp"
#include "layersparse/regularizers.hpp"
#include "layersparse/simulation.hpp"
#include "layersparse/training.hpp"
#include "test_support.hpp"

using namespace layersparse;

namespace {

Network linear_net(const Matrix& w) { return Network({w}, {Activation::identity()}); }

double brute_loss(const Network& net, const DataSet& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> x(data.inputs.row(i).begin(), data.inputs.row(i).end());
    const double r = data.targets[i] - forward(net, x);
    total += r * r;
  }
  return total;
}

double max_rel_error(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    for (std::size_t k = 0; k < a[j].size(); ++k) {
      const double x = a[j].data()[k];
      const double y = b[j].data()[k];
      worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1.0}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("lsq_loss") {
  RngStream rng(1);
  const Network net(testing::random_weights(rng, {1, 3, 2}), testing::relu_stack(2));
  DataSet data = testing::random_data(rng, 8, 2);
  for (std::size_t i = 0; i < data.size(); ++i) data.targets[i] = forward(net, data.inputs.row(i));
  CHECK(lsq_loss(net, data) == 0.0);

  const DataSet one{Matrix::from_rows({{0.5, 0.5}}), {1.0}};
  CHECK(lsq_loss(linear_net(Matrix(1, 2)), one) == 1.0);

  for (int trial = 0; trial < 20; ++trial) {
    const auto widths = testing::random_widths(rng, 3, 4);
    const Network r(testing::random_weights(rng, widths), testing::relu_stack(3));
    const DataSet d = testing::random_data(rng, 7, widths.back());
    CHECK(lsq_loss(r, d) == doctest::Approx(brute_loss(r, d)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(lsq_loss(linear_net(Matrix(1, 3)), one), ShapeError);
}

TEST_CASE("backprop on a linear model matches the closed form") {
  RngStream rng(2);
  const Matrix w = sample_uniform(rng, -1, 1, 1, 3);
  const DataSet data = testing::random_data(rng, 12, 3);
  const auto g = backprop(linear_net(w), data);
  Matrix expected(1, 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double pred = 0.0;
    for (std::size_t c = 0; c < 3; ++c) pred += w(0, c) * data.inputs(i, c);
    for (std::size_t c = 0; c < 3; ++c) expected(0, c) += 2.0 * (pred - data.targets[i]) * data.inputs(i, c);
  }
  CHECK(max_abs_diff(g[0], expected) <= 1e-12);

  const auto fd = finite_diff_grad(linear_net(w), data, 1e-6);
  CHECK(max_abs_diff(fd[0], expected) <= 1e-8);
}

TEST_CASE("zero residuals give a zero gradient") {
  RngStream rng(3);
  const Network net(testing::random_weights(rng, {1, 4, 4, 3}), testing::relu_stack(3));
  DataSet data = testing::random_data(rng, 10, 3);
  for (std::size_t i = 0; i < data.size(); ++i) data.targets[i] = forward(net, data.inputs.row(i));
  for (const auto& g : backprop(net, data)) CHECK(g == Matrix(g.rows(), g.cols()));
}

TEST_CASE("finite differences: sign flip of the inputs at zero weights") {
  RngStream rng(4);
  DataSet data = testing::random_data(rng, 9, 3);
  DataSet flipped = data;
  for (double& v : flipped.inputs.data()) v = -v;
  const auto g = finite_diff_grad(linear_net(Matrix(1, 3)), data, 1e-6);
  const auto h = finite_diff_grad(linear_net(Matrix(1, 3)), flipped, 1e-6);
  CHECK(max_abs_diff(g[0], scaled(h[0], -1.0)) <= 1e-8);
  CHECK_THROWS_AS(finite_diff_grad(linear_net(Matrix(1, 3)), data, 0.0), ParameterError);
}

TEST_CASE("backprop matches finite differences at smooth points") {
  RngStream rng(5);
  int checked = 0;
  while (checked < 50) {
    const std::size_t depth = testing::draw_between(rng, 1, 5);
    const auto widths = testing::random_widths(rng, depth, 4);
    std::vector<Activation> acts = testing::relu_stack(depth);
    if (rng.next_below(2)) acts.back() = Activation::leaky_relu(0.2);
    const Network net(testing::random_weights(rng, widths, -1.5, 1.5), acts);
    const DataSet data = testing::random_data(rng, 6, widths.back());
    // Skip draws where some pre-activation sits near a kink.
    bool smooth = true;
    ForwardTrace trace;
    for (std::size_t i = 0; i < data.size() && smooth; ++i) {
      forward_trace(net, data.inputs.row(i), trace);
      for (const auto& pre : trace.pre)
        for (double v : pre) smooth = smooth && std::abs(v) > 1e-3;
    }
    if (!smooth) continue;
    CHECK(max_rel_error(backprop(net, data), finite_diff_grad(net, data, 1e-6)) <= 1e-5);
    ++checked;
  }
}

TEST_CASE("initialization schemes") {
  RngStream rng(6);
  const std::vector<std::size_t> widths{1, 5, 5, 2};
  const auto acts = testing::relu_stack(3);
  const Network g = initialize_network(widths, acts, GlorotUniform{}, rng);
  CHECK(g.widths() == widths);
  for (double v : g.weight(1).data()) CHECK(std::abs(v) < std::sqrt(6.0 / 10.0));
  const Network z = initialize_network(widths, acts, ZeroInit{}, rng);
  for (const auto& w : z.weights()) CHECK(w == Matrix(w.rows(), w.cols()));
  const Network u = initialize_network(widths, acts, UniformRange{0.0, 0.5}, rng);
  for (const auto& w : u.weights())
    for (double v : w.data()) CHECK((v > 0.0 && v < 0.5));
  CHECK(initialize_network(widths, acts, WarmStart{g}, rng) == g);
  CHECK_THROWS_AS(initialize_network(std::vector<std::size_t>{1, 5, 3}, std::vector<Activation>{acts[0], acts[1]},
                                     WarmStart{g}, rng),
                  ShapeError);
}

TEST_CASE("sgd_fit with zero epochs returns the start") {
  RngStream rng(7);
  const Network net(testing::random_weights(rng, {1, 3, 2}), testing::relu_stack(2));
  const DataSet data = testing::random_data(rng, 20, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  const FitResult fit = sgd_fit(net, data, cfg, RegWeights::layer_only(2, 1.0));
  CHECK(fit.net == net);
  CHECK(fit.report.epochs_run == 0);
  CHECK(fit.report.epoch_objective.empty());
}

TEST_CASE("sgd_fit decreases the loss monotonically on a linear problem") {
  RngStream rng(8);
  DataSet data{sample_std_normal(rng, 20, 2), {}};
  for (std::size_t i = 0; i < 20; ++i) {
    data.targets.push_back(1.5 * data.inputs(i, 0) - 0.7 * data.inputs(i, 1) + 0.1 * rng.next_normal());
  }
  for (auto mode : {BatchGradient::Sum, BatchGradient::Mean}) {
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 20;
    cfg.gradient = mode;
    const auto& obj = sgd_fit(linear_net(Matrix(1, 2)), data, cfg, RegWeights::zero(1)).report.epoch_objective;
    REQUIRE(obj.size() == 50);
    for (std::size_t e = 1; e < obj.size(); ++e) CHECK(obj[e] < obj[e - 1]);
  }
}

TEST_CASE("sgd_fit is deterministic and reports re-evaluable objectives") {
  RngStream rng(9);
  GenConfig gen;
  gen.hidden_layers = 3;
  RngStream data_rng = rng.child("data");
  const GeneratedData g = generate(gen, data_rng);
  const auto widths = simulation_widths(gen);
  const auto acts = simulation_activations(gen);
  RngStream init_rng = rng.child("init");
  const Network start = initialize_network(widths, acts, GlorotUniform{}, init_rng);
  const RegWeights reg = RegWeights::layer_only(start.depth(), 0.2);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 99;
  const FitResult a = sgd_fit(start, g.train, cfg, reg);
  const FitResult b = sgd_fit(start, g.train, cfg, reg);
  CHECK(a.net == b.net);
  CHECK(a.report.epoch_objective == b.report.epoch_objective);
  for (int e = 1; e <= cfg.epochs; ++e) {
    TrainConfig shorter = cfg;
    shorter.epochs = e;
    const FitResult part = sgd_fit(start, g.train, shorter, reg);
    CHECK(std::abs(objective(part.net, g.train, reg) - a.report.epoch_objective[e - 1]) <= 1e-9);
  }
  cfg.seed = 100;
  CHECK_FALSE(sgd_fit(start, g.train, cfg, reg).net == a.net);
}

TEST_CASE("oversized batches are clamped to the sample count") {
  RngStream rng(10);
  const DataSet data = testing::random_data(rng, 5, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 50;
  TrainConfig exact = cfg;
  exact.batch_size = 5;
  const Network start = linear_net(Matrix(1, 2));
  CHECK(sgd_fit(start, data, cfg, RegWeights::zero(1)).net ==
        sgd_fit(start, data, exact, RegWeights::zero(1)).net);
}

TEST_CASE("divergence is reported with epoch and step") {
  RngStream rng(11);
  DataSet data = testing::random_data(rng, 30, 2);
  for (double& y : data.targets) y *= 100.0;
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 10.0;
  cfg.gradient = BatchGradient::Sum;
  try {
    sgd_fit(linear_net(Matrix(1, 2)), data, cfg, RegWeights::zero(1));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 0);
    CHECK(e.step() >= 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  RngStream rng(12);
  const DataSet data = testing::random_data(rng, 5, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(sgd_fit(linear_net(Matrix(1, 2)), data, cfg, RegWeights::zero(1)), ParameterError);
  cfg.learning_rate = 0.1;
  cfg.init = UniformRange{1.0, 1.0};
  CHECK_THROWS_AS(sgd_fit(linear_net(Matrix(1, 2)), data, cfg, RegWeights::zero(1)), ParameterError);
  DataSet bad = data;
  bad.targets.pop_back();
  CHECK_THROWS_AS(lsq_loss(linear_net(Matrix(1, 2)), bad), ShapeError);
}

TEST_CASE("a large layer weight drives the penalized layers to exact nonnegativity") {
  GenConfig gen;
  gen.hidden_layers = 2;
  gen.s_w = 0.5;
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    RngStream data_rng = rng.child("data");
    const GeneratedData g = generate(gen, data_rng);
    RngStream init_rng = rng.child("init");
    const Network start = initialize_network(simulation_widths(gen), simulation_activations(gen),
                                             GlorotUniform{}, init_rng);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.seed = seed;
    const FitResult fit = sgd_fit(start, g.train, cfg, RegWeights::layer_only(start.depth(), 10.0));
    exact += layer_penalty(fit.net.weight(0)) == 0.0 && layer_penalty(fit.net.weight(1)) == 0.0;
  }
  CHECK(exact >= 9);
}
