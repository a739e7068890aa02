#include "layersparse/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "layersparse/errors.hpp"

namespace layersparse {

RegWeights RegWeights::zero(std::size_t depth) {
  return {std::vector<double>(depth, 0.0), std::vector<double>(depth, 0.0),
          std::vector<double>(depth == 0 ? 0 : depth - 1, 0.0)};
}

RegWeights RegWeights::layer_only(std::size_t depth, double weight) {
  RegWeights reg = zero(depth);
  std::fill(reg.layer.begin(), reg.layer.end(), weight);
  return reg;
}

bool RegWeights::all_zero() const {
  auto zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  return zero(connection) && zero(node) && zero(layer);
}

void RegWeights::validate(std::size_t depth) const {
  if (connection.size() != depth || node.size() != depth || layer.size() + 1 != depth) {
    throw ParameterError("regularizer weights for depth " + std::to_string(depth) +
                         " need lengths (" + std::to_string(depth) + ", " + std::to_string(depth) +
                         ", " + std::to_string(depth - 1) + "), got (" +
                         std::to_string(connection.size()) + ", " + std::to_string(node.size()) +
                         ", " + std::to_string(layer.size()) + ")");
  }
  for (const auto* v : {&connection, &node, &layer}) {
    for (double x : *v) {
      if (!(x >= 0.0)) throw ParameterError("regularizer weights must be nonnegative");
    }
  }
}

double conn_penalty(const Matrix& v) {
  double s = 0.0;
  for (double x : v.data()) s += std::abs(x);
  return s;
}

namespace {

// Euclidean norm scaled by the largest magnitude, so tiny nonzero entries
// never underflow to a zero norm.
template <typename Range, typename Map>
double scaled_norm(const Range& values, Map map) {
  double peak = 0.0;
  for (double x : values) peak = std::max(peak, std::abs(map(x)));
  if (peak == 0.0 || !std::isfinite(peak)) return peak;
  double s = 0.0;
  for (double x : values) {
    const double t = map(x) / peak;
    s += t * t;
  }
  return peak * std::sqrt(s);
}

double row_norm(const Matrix& v, std::size_t r) {
  return scaled_norm(v.row(r), [](double x) { return x; });
}

}  // namespace

double node_penalty(const Matrix& v) {
  double s = 0.0;
  for (std::size_t r = 0; r < v.rows(); ++r) s += row_norm(v, r);
  return s;
}

double layer_penalty(const Matrix& v) {
  return scaled_norm(v.data(), [](double x) { return neg_part(x); });
}

double total_regularizer(std::span<const Matrix> weights, const RegWeights& reg) {
  reg.validate(weights.size());
  double total = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (reg.connection[j] != 0.0) total += reg.connection[j] * conn_penalty(weights[j]);
    if (reg.node[j] != 0.0) total += reg.node[j] * node_penalty(weights[j]);
    if (j + 1 < weights.size() && reg.layer[j] != 0.0) {
      total += reg.layer[j] * layer_penalty(weights[j]);
    }
  }
  return total;
}

void accumulate_regularizer_subgradient(std::span<const Matrix> weights, const RegWeights& reg,
                                        std::span<Matrix> grads) {
  reg.validate(weights.size());
  if (grads.size() != weights.size()) throw ShapeError("gradient stack depth mismatch");
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const Matrix& v = weights[j];
    Matrix& g = grads[j];
    if (g.rows() != v.rows() || g.cols() != v.cols()) {
      throw ShapeError("gradient shape " + g.shape_string() + " does not match weight " +
                       v.shape_string());
    }
    if (const double rc = reg.connection[j]; rc != 0.0) {
      auto src = v.data();
      auto dst = g.data();
      for (std::size_t k = 0; k < src.size(); ++k) {
        if (src[k] > 0.0) dst[k] += rc;
        else if (src[k] < 0.0) dst[k] -= rc;
      }
    }
    if (const double rn = reg.node[j]; rn != 0.0) {
      for (std::size_t r = 0; r < v.rows(); ++r) {
        const double norm = row_norm(v, r);
        if (norm == 0.0) continue;
        for (std::size_t c = 0; c < v.cols(); ++c) g(r, c) += rn * v(r, c) / norm;
      }
    }
    if (j + 1 < weights.size()) {
      if (const double rl = reg.layer[j]; rl != 0.0) {
        const double h = layer_penalty(v);
        if (h == 0.0) continue;
        auto src = v.data();
        auto dst = g.data();
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] += rl * neg_part(src[k]) / h;
      }
    }
  }
}

std::vector<Matrix> regularizer_subgradient(std::span<const Matrix> weights, const RegWeights& reg) {
  std::vector<Matrix> grads;
  grads.reserve(weights.size());
  for (const auto& w : weights) grads.emplace_back(w.rows(), w.cols());
  accumulate_regularizer_subgradient(weights, reg, grads);
  return grads;
}

}  // namespace layersparse
