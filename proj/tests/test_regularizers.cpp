#include <cmath>

#include "doctest.h"
#include "layersparse/errors.hpp"
#include "layersparse/regularizers.hpp"
#include "test_support.hpp"

using namespace layersparse;

namespace {

const Matrix kSample = Matrix::from_rows({{1, -2}, {0, -1}});

// Entries bounded away from zero and from each other's kinks.
Matrix away_from_kinks(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    const double mag = 0.2 + 1.5 * rng.next_unit();
    v = rng.next_unit() < 0.5 ? -mag : mag;
  }
  // Guarantee at least one negative entry so the layer term is differentiable.
  m(0, 0) = -std::abs(m(0, 0));
  return m;
}

}  // namespace

TEST_CASE("negative part") {
  CHECK(neg_part(-3) == -3);
  CHECK(neg_part(2) == 0);
  CHECK(neg_part(0) == 0);
}

TEST_CASE("per-layer penalties on hand examples") {
  CHECK(conn_penalty(kSample) == 4.0);
  CHECK(conn_penalty(Matrix(3, 2)) == 0.0);
  CHECK(conn_penalty(scaled(kSample, 3.0)) == 12.0);

  CHECK(node_penalty(kSample) == doctest::Approx(std::sqrt(5.0) + 1.0).epsilon(1e-15));
  CHECK(node_penalty(Matrix::from_rows({{0, 0}, {0, -2.5}})) == 2.5);
  CHECK(node_penalty(Matrix(2, 2)) == 0.0);

  CHECK(layer_penalty(kSample) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(layer_penalty(Matrix::from_rows({{0, 3}, {1, 0}})) == 0.0);
  CHECK(layer_penalty(Matrix::from_rows({{-3}})) == 3.0);
}

TEST_CASE("total regularizer") {
  // The regularizer does not look at the output-row constraint, so any chain works.
  std::vector<Matrix> stack{kSample, Matrix::from_rows({{1, 1, -1}, {2, 0, 0}})};
  CHECK(total_regularizer(stack, RegWeights::zero(2)) == 0.0);

  RegWeights layer = RegWeights::zero(2);
  layer.layer[0] = 1.0;
  CHECK(total_regularizer(stack, layer) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));

  RegWeights conn = RegWeights::zero(2);
  conn.connection[0] = 2.0;
  CHECK(total_regularizer(stack, conn) == 8.0);

  RegWeights bad = RegWeights::zero(2);
  bad.layer = {1.0, 1.0};
  CHECK_THROWS_AS(total_regularizer(stack, bad), ParameterError);
  bad = RegWeights::zero(2);
  bad.node[1] = -1.0;
  CHECK_THROWS_AS(total_regularizer(stack, bad), ParameterError);
}

TEST_CASE("subgradient hand examples") {
  RegWeights layer = RegWeights::zero(2);
  layer.layer[0] = 1.0;
  std::vector<Matrix> stack{Matrix::from_rows({{-3, 4}}), Matrix::from_rows({{1}, {1}})};
  auto g = regularizer_subgradient(stack, layer);
  CHECK(g[0] == Matrix::from_rows({{-1, 0}}));
  CHECK(g[1] == Matrix(2, 1));

  stack[0] = Matrix::from_rows({{3, 4}});
  g = regularizer_subgradient(stack, layer);
  CHECK(g[0] == Matrix(1, 2));

  RegWeights conn = RegWeights::zero(2);
  conn.connection[0] = 1.0;
  stack[0] = Matrix::from_rows({{2, -5}});
  CHECK(regularizer_subgradient(stack, conn)[0] == Matrix::from_rows({{1, -1}}));
  stack[0] = Matrix::from_rows({{0, -5}});
  CHECK(regularizer_subgradient(stack, conn)[0] == Matrix::from_rows({{0, -1}}));

  RegWeights node = RegWeights::zero(2);
  node.node[0] = 2.0;
  stack[0] = Matrix::from_rows({{3, -4}});
  const auto gn = regularizer_subgradient(stack, node)[0];
  CHECK(gn(0, 0) == doctest::Approx(1.2));
  CHECK(gn(0, 1) == doctest::Approx(-1.6));
  stack[0] = Matrix(1, 2);
  CHECK(regularizer_subgradient(stack, node)[0] == Matrix(1, 2));
}

TEST_CASE("innermost matrix is never layer-penalized") {
  std::vector<Matrix> stack{Matrix::from_rows({{1}}), Matrix::from_rows({{-7}})};
  CHECK(total_regularizer(stack, RegWeights::layer_only(2, 5.0)) == 0.0);
  CHECK(regularizer_subgradient(stack, RegWeights::layer_only(2, 5.0))[1] == Matrix(1, 1));
}

TEST_CASE("layer penalty vanishes exactly on nonnegative matrices") {
  RngStream rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix m = sample_uniform(rng, -1, 1, 1 + rng.next_below(4), 1 + rng.next_below(4));
    if (trial % 2) m = testing::absolute(m);
    if (trial % 7 == 0) m(0, 0) = -1e-300;
    CHECK((layer_penalty(m) == 0.0) == (m.min_entry() >= 0.0));
  }
}

TEST_CASE("penalties are positively homogeneous and convex") {
  RngStream rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 1 + rng.next_below(5);
    const std::size_t c = 1 + rng.next_below(5);
    const Matrix u = sample_uniform(rng, -2, 2, r, c);
    const Matrix v = sample_uniform(rng, -2, 2, r, c);
    const double a = 4.0 * rng.next_unit();
    const Matrix mid = scaled(add(u, v), 0.5);
    for (auto* penalty : {&conn_penalty, &node_penalty, &layer_penalty}) {
      CHECK(std::abs(penalty(scaled(u, a)) - a * penalty(u)) <= 1e-12 * std::max(1.0, a));
      CHECK(penalty(mid) <= 0.5 * penalty(u) + 0.5 * penalty(v) + 1e-12);
    }
  }
}

TEST_CASE("subgradient matches central differences away from kinks") {
  RngStream rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t depth = 1 + rng.next_below(4);
    std::vector<std::size_t> widths{1};
    for (std::size_t j = 0; j < depth; ++j) widths.push_back(1 + rng.next_below(4));
    std::vector<Matrix> stack;
    for (std::size_t j = 0; j < depth; ++j) stack.push_back(away_from_kinks(rng, widths[j], widths[j + 1]));
    RegWeights reg = RegWeights::zero(depth);
    for (auto* vec : {&reg.connection, &reg.node, &reg.layer}) {
      for (double& w : *vec) w = rng.next_unit();
    }
    const auto exact = regularizer_subgradient(stack, reg);
    const double step = 1e-6;
    for (std::size_t j = 0; j < depth; ++j) {
      for (std::size_t k = 0; k < stack[j].size(); ++k) {
        auto perturbed = stack;
        perturbed[j].data()[k] += step;
        const double up = total_regularizer(perturbed, reg);
        perturbed[j].data()[k] -= 2 * step;
        const double down = total_regularizer(perturbed, reg);
        const double numeric = (up - down) / (2 * step);
        const double analytic = exact[j].data()[k];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1.0});
        CHECK(std::abs(numeric - analytic) / scale <= 1e-5);
      }
    }
  }
}
