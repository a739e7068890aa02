#include "layersparse/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "layersparse/errors.hpp"

namespace layersparse {

void DataSet::validate() const {
  if (inputs.rows() != targets.size()) {
    throw ShapeError("data set has " + std::to_string(inputs.rows()) + " input rows but " +
                     std::to_string(targets.size()) + " targets");
  }
  if (!inputs.all_finite()) throw ValidationError("data set inputs contain non-finite values");
  for (double y : targets) {
    if (!std::isfinite(y)) throw ValidationError("data set targets contain non-finite values");
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (epochs < 0) throw ParameterError("epochs must be nonnegative");
  if (const auto* r = std::get_if<UniformRange>(&init); r && !(r->lo < r->hi)) {
    throw ParameterError("uniform init range needs lo < hi");
  }
}

Network initialize_network(std::span<const std::size_t> widths,
                           std::span<const Activation> activations, const InitScheme& init,
                           RngStream& rng) {
  if (widths.size() < 2 || activations.size() + 1 != widths.size()) {
    throw ShapeError("architecture needs depth+1 widths and depth activations");
  }
  if (const auto* warm = std::get_if<WarmStart>(&init)) {
    const auto have = warm->net.widths();
    if (!std::equal(have.begin(), have.end(), widths.begin(), widths.end()) ||
        !std::equal(activations.begin(), activations.end(), warm->net.activations().begin(),
                    warm->net.activations().end())) {
      throw ShapeError("warm-start network does not match the requested architecture");
    }
    return warm->net;
  }
  std::vector<Matrix> weights;
  for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
    const std::size_t rows = widths[j];
    const std::size_t cols = widths[j + 1];
    if (std::holds_alternative<ZeroInit>(init)) {
      weights.emplace_back(rows, cols, 0.0);
    } else if (const auto* r = std::get_if<UniformRange>(&init)) {
      weights.push_back(sample_uniform(rng, r->lo, r->hi, rows, cols));
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
      weights.push_back(sample_uniform(rng, -bound, bound, rows, cols));
    }
  }
  return Network(std::move(weights), std::vector<Activation>(activations.begin(), activations.end()));
}

namespace {

void check_data(const Network& net, const DataSet& data) {
  data.validate();
  if (data.dim() != net.input_dim()) {
    throw ShapeError("data dimension " + std::to_string(data.dim()) +
                     " does not match network input dimension " + std::to_string(net.input_dim()));
  }
}

// Reusable buffers for per-sample reverse accumulation.
class GradientWorkspace {
 public:
  explicit GradientWorkspace(const Network& net) {
    for (const auto& w : net.weights()) grads_.emplace_back(w.rows(), w.cols());
  }

  std::vector<Matrix>& grads() { return grads_; }

  void zero() {
    for (auto& g : grads_) std::fill(g.data().begin(), g.data().end(), 0.0);
  }

  // Adds d/dW (y - f(x))^2 into grads(); returns the squared residual.
  double accumulate(const Network& net, std::span<const double> x, double y) {
    const double out = forward_trace(net, x, trace_);
    const double residual = out - y;
    const std::size_t l = net.depth();
    delta_.assign(1, 2.0 * residual);
    for (std::size_t j = 0; j < l; ++j) {
      const Activation& act = net.activation(j);
      const auto& pre = trace_.pre[j];
      for (std::size_t r = 0; r < delta_.size(); ++r) delta_[r] *= activation_derivative(act, pre[r]);
      const auto& in = (j + 1 < l) ? trace_.post[j + 1] : trace_.input;
      Matrix& g = grads_[j];
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const double d = delta_[r];
        if (d == 0.0) continue;
        for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += d * in[c];
      }
      if (j + 1 < l) {
        const Matrix& w = net.weight(j);
        next_.assign(w.cols(), 0.0);
        for (std::size_t r = 0; r < w.rows(); ++r) {
          const double d = delta_[r];
          if (d == 0.0) continue;
          for (std::size_t c = 0; c < w.cols(); ++c) next_[c] += w(r, c) * d;
        }
        delta_.swap(next_);
      }
    }
    return residual * residual;
  }

 private:
  std::vector<Matrix> grads_;
  ForwardTrace trace_;
  std::vector<double> delta_;
  std::vector<double> next_;
};

}  // namespace

double lsq_loss(const Network& net, const DataSet& data) {
  check_data(net, data);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.targets[i] - forward(net, data.inputs.row(i));
    total += r * r;
  }
  return total;
}

double objective(const Network& net, const DataSet& data, const RegWeights& reg) {
  return lsq_loss(net, data) + total_regularizer(net.weights(), reg);
}

std::vector<Matrix> backprop(const Network& net, const DataSet& batch) {
  check_data(net, batch);
  GradientWorkspace ws(net);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ws.accumulate(net, batch.inputs.row(i), batch.targets[i]);
  }
  return std::move(ws.grads());
}

std::vector<Matrix> finite_diff_grad(const Network& net, const DataSet& batch, double step) {
  if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
  check_data(net, batch);
  Network probe = net;
  std::vector<Matrix> grads;
  for (std::size_t j = 0; j < net.depth(); ++j) {
    Matrix g(net.weight(j).rows(), net.weight(j).cols());
    auto entries = probe.weight(j).data();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const double saved = entries[k];
      entries[k] = saved + step;
      const double up = lsq_loss(probe, batch);
      entries[k] = saved - step;
      const double down = lsq_loss(probe, batch);
      entries[k] = saved;
      g.data()[k] = (up - down) / (2.0 * step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

FitResult sgd_fit(const Network& start, const DataSet& data, const TrainConfig& cfg,
                  const RegWeights& reg) {
  cfg.validate();
  check_data(start, data);
  reg.validate(start.depth());

  FitResult result{start, {}};
  Network& net = result.net;
  const std::size_t n = data.size();
  if (cfg.epochs == 0 || n == 0) {
    result.report.final_objective = objective(net, data, reg);
    return result;
  }

  const std::size_t batch = std::min(cfg.batch_size, n);
  const bool regularize = !reg.all_zero();
  RngStream order_rng = RngStream(cfg.seed).child("sgd-shuffle");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  GradientWorkspace ws(net);
  result.report.epoch_objective.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[order_rng.next_below(i + 1)]);
    }
    int step = 0;
    for (std::size_t begin = 0; begin < n; begin += batch, ++step) {
      const std::size_t end = std::min(begin + batch, n);
      ws.zero();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        batch_loss += ws.accumulate(net, data.inputs.row(i), data.targets[i]);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite batch loss at epoch " + std::to_string(epoch) +
                                  ", step " + std::to_string(step),
                              epoch, step);
      }
      auto& grads = ws.grads();
      if (cfg.gradient == BatchGradient::Mean) {
        const double inv = 1.0 / static_cast<double>(end - begin);
        for (auto& g : grads) {
          for (double& v : g.data()) v *= inv;
        }
      }
      if (regularize) accumulate_regularizer_subgradient(net.weights(), reg, grads);
      for (std::size_t j = 0; j < net.depth(); ++j) {
        auto w = net.weight(j).data();
        auto g = grads[j].data();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * g[k];
      }
    }
    const double obj = objective(net, data, reg);
    if (!std::isfinite(obj) || obj > cfg.divergence_cap) {
      char value[32];
      std::snprintf(value, sizeof value, "%.6g", obj);
      throw DivergenceError(std::string("objective ") + value + " diverged at epoch " +
                                std::to_string(epoch) + ", step " + std::to_string(step - 1),
                            epoch, step - 1);
    }
    result.report.epoch_objective.push_back(obj);
    result.report.epochs_run = epoch + 1;
  }
  result.report.final_objective = result.report.epoch_objective.back();
  return result;
}

}  // namespace layersparse
