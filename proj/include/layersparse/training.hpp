#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "layersparse/matrix.hpp"
#include "layersparse/network.hpp"
#include "layersparse/regularizers.hpp"
#include "layersparse/rng.hpp"

namespace layersparse {

// Samples are the rows of `inputs`; targets[i] belongs to row i.
struct DataSet {
  Matrix inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t dim() const noexcept { return inputs.cols(); }
  void validate() const;
};

// Entries uniform on +-sqrt(6 / (p_j + p_{j+1})).
struct GlorotUniform {};
struct UniformRange {
  double lo = -1.0;
  double hi = 1.0;
};
struct ZeroInit {};
struct WarmStart {
  Network net;
};
using InitScheme = std::variant<GlorotUniform, UniformRange, ZeroInit, WarmStart>;

// How per-sample loss gradients are combined inside a mini-batch. The
// regularizer subgradient is added once per step in both cases.
enum class BatchGradient { Sum, Mean };

struct TrainConfig {
  std::size_t batch_size = 10;
  double learning_rate = 1e-2;
  int epochs = 0;
  std::uint64_t seed = 0;
  bool shuffle = true;
  InitScheme init = GlorotUniform{};
  BatchGradient gradient = BatchGradient::Mean;
  double divergence_cap = 1e12;

  void validate() const;
};

struct FitReport {
  // Least-squares sum plus total regularizer over the full data set, after
  // each epoch.
  std::vector<double> epoch_objective;
  double final_objective = 0.0;
  int epochs_run = 0;
};

struct FitResult {
  Network net;
  FitReport report;
};

// Builds a network with the given architecture from `init`. A WarmStart
// network must have exactly this architecture.
Network initialize_network(std::span<const std::size_t> widths,
                           std::span<const Activation> activations, const InitScheme& init,
                           RngStream& rng);

// Sum of squared residuals.
double lsq_loss(const Network& net, const DataSet& data);
double objective(const Network& net, const DataSet& data, const RegWeights& reg);

// Gradient of the summed squared residuals with respect to every weight.
std::vector<Matrix> backprop(const Network& net, const DataSet& batch);
// Central differences of lsq_loss, one weight at a time.
std::vector<Matrix> finite_diff_grad(const Network& net, const DataSet& batch, double step);

// Mini-batch subgradient descent on lsq_loss + total_regularizer.
// Each epoch visits every sample once in consecutive batches of
// cfg.batch_size (the last batch may be short); with cfg.shuffle the order is
// redrawn every epoch from a stream seeded by cfg.seed.
// Throws DivergenceError if a batch loss or epoch objective is non-finite or
// the objective exceeds cfg.divergence_cap.
FitResult sgd_fit(const Network& start, const DataSet& data, const TrainConfig& cfg,
                  const RegWeights& reg);

}  // namespace layersparse
