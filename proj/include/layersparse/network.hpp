#pragma once

#include <span>
#include <string>
#include <vector>

#include "layersparse/matrix.hpp"

namespace layersparse {

enum class ActivationKind { Identity, ReLU, LeakyReLU };

// Elementwise, positive-homogeneous activation, uniform within a layer.
struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double slope = 0.0;  // LeakyReLU only, in (0, 1)

  static Activation identity() { return {ActivationKind::Identity, 0.0}; }
  static Activation relu() { return {ActivationKind::ReLU, 0.0}; }
  static Activation leaky_relu(double slope);

  // True when every output is >= 0 (only ReLU).
  bool nonnegative_valued() const noexcept { return kind == ActivationKind::ReLU; }
  std::string name() const;

  friend bool operator==(const Activation&, const Activation&) = default;
};

double apply_activation(const Activation& act, double t);
// Derivative with the convention d/dt ReLU(0) = 0 and slope for leaky t < 0.
double activation_derivative(const Activation& act, double t);

// Closed-form composition t -> outer(inner(t)) for the supported kinds.
Activation compose(const Activation& outer, const Activation& inner);

/// Scalar-output feedforward network without biases:
///   f(x) = f1[W1 f2[W2 ... fl[Wl x]]]
/// Layer 1 (index 0 here) is the output layer; W^j has shape p_j x p_{j+1},
/// widths = (p_1 = 1, p_2, ..., p_{l+1} = input dim).
class Network {
 public:
  Network(std::vector<Matrix> weights, std::vector<Activation> activations);

  std::size_t depth() const noexcept { return weights_.size(); }
  std::size_t input_dim() const noexcept { return weights_.back().cols(); }
  std::vector<std::size_t> widths() const;

  // Zero-based layer index: layer(0) is W^1.
  const Matrix& weight(std::size_t index) const { return weights_.at(index); }
  Matrix& weight(std::size_t index) { return weights_.at(index); }
  const Activation& activation(std::size_t index) const { return activations_.at(index); }

  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  std::vector<Matrix>& weights() noexcept { return weights_; }
  const std::vector<Activation>& activations() const noexcept { return activations_; }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<Matrix> weights_;
  std::vector<Activation> activations_;
};

// Per-layer pre- and post-activation vectors, indexed like the weights
// (pre[0]/post[0] belong to the output layer). `input` is x itself.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

double forward(const Network& net, std::span<const double> x);
double forward_trace(const Network& net, std::span<const double> x, ForwardTrace& trace);

// Sum over layers of p_j * p_{j+1}.
std::size_t param_count(const Network& net);

// Shapes must chain; used by every constructor of derived networks.
std::vector<std::size_t> widths_of(std::span<const Matrix> weights);

}  // namespace layersparse
