#include "layersparse/network.hpp"

#include <algorithm>
#include <cmath>

#include "layersparse/errors.hpp"

namespace layersparse {

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw ParameterError("leaky_relu slope must lie in (0,1), got " + std::to_string(slope));
  }
  return {ActivationKind::LeakyReLU, slope};
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::Identity:
      return "identity";
    case ActivationKind::ReLU:
      return "relu";
    case ActivationKind::LeakyReLU:
      return "leaky_relu(" + std::to_string(slope) + ")";
  }
  return "?";
}

double apply_activation(const Activation& act, double t) {
  switch (act.kind) {
    case ActivationKind::Identity:
      return t;
    case ActivationKind::ReLU:
      return t > 0.0 ? t : 0.0;
    case ActivationKind::LeakyReLU:
      return t >= 0.0 ? t : act.slope * t;
  }
  return t;
}

double activation_derivative(const Activation& act, double t) {
  switch (act.kind) {
    case ActivationKind::Identity:
      return 1.0;
    case ActivationKind::ReLU:
      return t > 0.0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU:
      return t >= 0.0 ? 1.0 : act.slope;
  }
  return 1.0;
}

Activation compose(const Activation& outer, const Activation& inner) {
  if (outer.kind == ActivationKind::Identity) return inner;
  if (inner.kind == ActivationKind::Identity) return outer;
  // Both kinds act as the identity on [0, inf); a ReLU on either side kills
  // the negative branch, two leaky slopes multiply.
  if (outer.kind == ActivationKind::ReLU || inner.kind == ActivationKind::ReLU) {
    return Activation::relu();
  }
  return Activation::leaky_relu(outer.slope * inner.slope);
}

std::vector<std::size_t> widths_of(std::span<const Matrix> weights) {
  if (weights.empty()) throw ValidationError("network needs at least one layer");
  std::vector<std::size_t> widths;
  widths.reserve(weights.size() + 1);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const Matrix& w = weights[j];
    if (w.rows() == 0 || w.cols() == 0) {
      throw ValidationError("layer " + std::to_string(j + 1) + " has an empty weight matrix");
    }
    if (j > 0 && weights[j - 1].cols() != w.rows()) {
      throw ValidationError("shape chain broken between layer " + std::to_string(j) + " (" +
                            weights[j - 1].shape_string() + ") and layer " +
                            std::to_string(j + 1) + " (" + w.shape_string() + ")");
    }
    widths.push_back(w.rows());
  }
  widths.push_back(weights.back().cols());
  return widths;
}

Network::Network(std::vector<Matrix> weights, std::vector<Activation> activations)
    : weights_(std::move(weights)), activations_(std::move(activations)) {
  const auto widths = widths_of(weights_);
  if (widths.front() != 1) {
    throw ValidationError("output width p1 must be 1, got " + std::to_string(widths.front()));
  }
  if (activations_.size() != weights_.size()) {
    throw ValidationError("network has " + std::to_string(weights_.size()) + " layers but " +
                          std::to_string(activations_.size()) + " activations");
  }
  for (const auto& act : activations_) {
    if (act.kind == ActivationKind::LeakyReLU && !(act.slope > 0.0 && act.slope < 1.0)) {
      throw ValidationError("leaky_relu slope must lie in (0,1)");
    }
  }
}

std::vector<std::size_t> Network::widths() const { return widths_of(weights_); }

namespace {

void check_input(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_dim()));
  }
}

}  // namespace

double forward(const Network& net, std::span<const double> x) {
  check_input(net, x);
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t j = net.depth(); j-- > 0;) {
    h = matvec(net.weight(j), h);
    const Activation& act = net.activation(j);
    for (double& v : h) v = apply_activation(act, v);
  }
  return h[0];
}

double forward_trace(const Network& net, std::span<const double> x, ForwardTrace& trace) {
  check_input(net, x);
  const std::size_t l = net.depth();
  trace.input.assign(x.begin(), x.end());
  trace.pre.resize(l);
  trace.post.resize(l);
  const std::vector<double>* h = &trace.input;
  for (std::size_t j = l; j-- > 0;) {
    const Matrix& w = net.weight(j);
    const Activation& act = net.activation(j);
    auto& pre = trace.pre[j];
    auto& post = trace.post[j];
    pre.resize(w.rows());
    post.resize(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * (*h)[c];
      pre[r] = acc;
      post[r] = apply_activation(act, acc);
    }
    h = &post;
  }
  return trace.post[0][0];
}

std::size_t param_count(const Network& net) {
  std::size_t total = 0;
  for (const auto& w : net.weights()) total += w.size();
  return total;
}

}  // namespace layersparse
