#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "layersparse/errors.hpp"
#include "layersparse/matrix.hpp"
#include "layersparse/rng.hpp"
#include "layersparse/stats.hpp"
#include "test_support.hpp"

using namespace layersparse;

namespace {

// Sort, then interpolate between 1-based ranks floor(h) and ceil(h), h = (n-1)q + 1.
double quantile_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q + 1.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo - 1] + (h - static_cast<double>(lo)) * (v[hi - 1] - v[lo - 1]);
}

}  // namespace

TEST_CASE("matmul examples") {
  const Matrix col = Matrix::from_rows({{3}, {-1}});
  CHECK(matmul(Matrix::identity(2), col) == col);
  CHECK(matmul(Matrix::from_rows({{1, 2}}), col) == Matrix::from_rows({{1}}));
  const Matrix any = Matrix::from_rows({{1.5, -2}, {4, 0.25}});
  CHECK(matmul(Matrix(2, 2), any) == Matrix(2, 2));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(matvec(Matrix(2, 3), std::vector<double>(2)), ShapeError);
}

TEST_CASE("matmul agrees with a naive product and is associative") {
  RngStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = testing::draw_between(rng, 1, 8);
    const std::size_t n = testing::draw_between(rng, 1, 8);
    const std::size_t k = testing::draw_between(rng, 1, 8);
    const std::size_t r = testing::draw_between(rng, 1, 8);
    const Matrix a = sample_uniform(rng, -2, 2, m, n);
    const Matrix b = sample_uniform(rng, -2, 2, n, k);
    const Matrix c = sample_uniform(rng, -2, 2, k, r);
    CHECK(max_abs_diff(matmul(a, b), testing::naive_product(a, b)) <= 1e-12);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-10);
  }
}

TEST_CASE("matrix construction validates entry count") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
}

TEST_CASE("rng streams are reproducible and children independent of parent position") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  const RngStream parent(9);
  RngStream advanced(9);
  for (int i = 0; i < 10; ++i) advanced.next_u64();
  RngStream c1 = parent.child("x", 3);
  RngStream c2 = advanced.child("x", 3);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(parent.child("x").key() != parent.child("y").key());
  CHECK(parent.child("x", 0).key() != parent.child("x", 1).key());
}

TEST_CASE("splitmix64 reference outputs") {
  // Published SplitMix64 sequence for state 1234567 (first value 6457827717110365317).
  // RngStream hashes its seed first, so check the raw mixer directly.
  std::uint64_t state = 1234567;
  state += 0x9E3779B97F4A7C15ULL;
  CHECK(splitmix64_mix(state) == 6457827717110365317ULL);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("sample_uniform range, determinism and mean") {
  RngStream rng(1);
  const Matrix m = sample_uniform(rng, 0, 2, 50, 40);
  for (double v : m.data()) {
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
  RngStream s1 = RngStream(5).child("u");
  RngStream s2 = RngStream(5).child("u");
  CHECK(sample_uniform(s1, -1, 3, 4, 4) == sample_uniform(s2, -1, 3, 4, 4));

  RngStream big(11);
  const Matrix draws = sample_uniform(big, -2, 2, 100000, 1);
  const double mean = std::accumulate(draws.data().begin(), draws.data().end(), 0.0) / 1e5;
  CHECK(std::abs(mean) < 0.05);

  CHECK_THROWS_AS(sample_uniform(rng, 1, 1, 2, 2), ParameterError);
  CHECK_THROWS_AS(sample_uniform(rng, 2, 1, 2, 2), ParameterError);
}

TEST_CASE("sample_uniform consumes exactly rows*cols draws") {
  RngStream a(3);
  RngStream b(3);
  sample_uniform(a, -1, 1, 3, 5);
  for (int i = 0; i < 15; ++i) b.next_unit();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("sample_std_normal moments, shape and determinism") {
  RngStream rng(2);
  const Matrix z = sample_std_normal(rng, 100000, 1);
  const auto data = z.data();
  const double mean = std::accumulate(data.begin(), data.end(), 0.0) / 1e5;
  double var = 0.0;
  for (double v : data) var += (v - mean) * (v - mean);
  var /= 1e5 - 1;
  CHECK(std::abs(var - 1.0) < 0.05);
  CHECK(std::abs(mean) < 0.02);

  RngStream s(8);
  const Matrix m = sample_std_normal(s, 3, 2);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  RngStream t(8);
  CHECK(sample_std_normal(t, 3, 2) == m);
}

TEST_CASE("box-muller pairs: cos branch first, sin branch next") {
  RngStream a(77);
  RngStream b(77);
  const double u1 = b.next_unit();
  const double u2 = b.next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  CHECK(a.next_normal() == doctest::Approx(radius * std::cos(angle)).epsilon(1e-15));
  CHECK(a.next_normal() == doctest::Approx(radius * std::sin(angle)).epsilon(1e-15));
}

TEST_CASE("sample_bernoulli") {
  RngStream rng(4);
  const auto zeros = sample_bernoulli(rng, 0.0, 1000);
  CHECK(std::all_of(zeros.begin(), zeros.end(), [](int v) { return v == 0; }));
  const auto ones = sample_bernoulli(rng, 1.0, 1000);
  CHECK(std::all_of(ones.begin(), ones.end(), [](int v) { return v == 1; }));
  const auto mix = sample_bernoulli(rng, 0.3, 100000);
  const double frac = std::accumulate(mix.begin(), mix.end(), 0.0) / 1e5;
  CHECK(std::abs(frac - 0.3) < 0.01);
  CHECK_THROWS_AS(sample_bernoulli(rng, -0.1, 3), ParameterError);
  CHECK_THROWS_AS(sample_bernoulli(rng, 1.1, 3), ParameterError);
}

TEST_CASE("next_below stays in range") {
  RngStream rng(6);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) hits.at(rng.next_below(7))++;
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("quantile examples") {
  CHECK(quantile(std::vector<double>{1, 2, 3}, 0.5) == 2.0);
  CHECK(quantile(std::vector<double>{1, 2, 3, 4}, 0.75) == doctest::Approx(3.25).epsilon(1e-15));
  for (double q : {0.0, 0.3, 0.75, 1.0}) CHECK(quantile(std::vector<double>{5}, q) == 5.0);
  CHECK(quantile(std::vector<double>{4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile(std::vector<double>{4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(median(std::vector<double>{3, 1, 2, 10}) == 2.5);
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), ParameterError);
  CHECK_THROWS_AS(quantile(std::vector<double>{1}, 1.5), ParameterError);
}

TEST_CASE("quantile matches the sort-and-interpolate oracle") {
  RngStream rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = testing::draw_between(rng, 1, 40);
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) {
      // Small integer pool produces ties.
      v.push_back(trial % 2 ? static_cast<double>(rng.next_below(5)) : rng.next_normal());
    }
    const double q = trial % 10 == 0 ? 0.75 : rng.next_unit();
    CHECK(std::abs(quantile(v, q) - quantile_oracle(v, q)) <= 1e-12);
  }
}
