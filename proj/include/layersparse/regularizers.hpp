#pragma once

#include <span>
#include <vector>

#include "layersparse/matrix.hpp"

namespace layersparse {

/// Per-layer tuning vectors for the three sparsity penalties.
/// connection and node have one entry per layer, layer has depth - 1 entries
/// (the innermost matrix is never layer-penalized).
struct RegWeights {
  std::vector<double> connection;
  std::vector<double> node;
  std::vector<double> layer;

  static RegWeights zero(std::size_t depth);
  // Layer penalty only, same weight on layers 1..depth-1.
  static RegWeights layer_only(std::size_t depth, double weight);

  bool all_zero() const;
  // Throws ParameterError on wrong lengths or negative entries.
  void validate(std::size_t depth) const;
};

inline double neg_part(double a) { return a < 0.0 ? a : 0.0; }

// Sum of absolute entries.
double conn_penalty(const Matrix& v);
// Sum over rows of the row's Euclidean norm.
double node_penalty(const Matrix& v);
// Euclidean norm of the entrywise negative parts. Zero exactly when no entry
// is negative.
double layer_penalty(const Matrix& v);

double total_regularizer(std::span<const Matrix> weights, const RegWeights& reg);

// One subgradient of total_regularizer. At kinks the zero element is chosen:
// sign(0) = 0, a zero row contributes nothing to the node term, and a layer
// without negative entries contributes nothing to the layer term.
std::vector<Matrix> regularizer_subgradient(std::span<const Matrix> weights, const RegWeights& reg);

// Adds the subgradient into `grads` in place; skips layers whose weights are zero.
void accumulate_regularizer_subgradient(std::span<const Matrix> weights, const RegWeights& reg,
                                        std::span<Matrix> grads);

}  // namespace layersparse
