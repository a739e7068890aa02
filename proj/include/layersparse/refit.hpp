#pragma once

#include <optional>
#include <span>
#include <vector>

#include "layersparse/condense.hpp"
#include "layersparse/network.hpp"
#include "layersparse/training.hpp"

namespace layersparse {

/// Architecture of a condensed network: layer i has shape
/// widths[i] x widths[i+1]. For an active set j_1 < ... < j_s of an original
/// network with widths p, widths = (p_1, p_{j_1+1}, ..., p_{j_s+1}).
struct CondensedSpace {
  ActiveSet active;
  std::vector<std::size_t> widths;
  std::vector<Activation> activations;

  std::size_t depth() const noexcept { return activations.size(); }
  std::vector<std::pair<std::size_t, std::size_t>> shapes() const;
};

// Activations compose over each merged run, as in condense_as_stated.
CondensedSpace condensed_space(const ActiveSet& active, std::span<const std::size_t> widths,
                               std::span<const Activation> activations);
// The architecture of `net` itself (every layer kept).
CondensedSpace space_of(const Network& net);

// Unregularized least-squares fit on `space`, starting from `warm` when given
// (it must have exactly this architecture) and from cfg.init otherwise.
FitResult refit(const CondensedSpace& space, const DataSet& data, const TrainConfig& cfg,
                const std::optional<Network>& warm = std::nullopt);

struct PipelineConfig {
  TrainConfig train;
  // Refit optimizer settings; the main fit's settings when empty.
  std::optional<TrainConfig> refit_train;
  double layer_weight = 0.0;
  double tolerance = 1e-6;
  CondenseMode mode = CondenseMode::Sound;
  std::size_t probe_count = 100;
};

struct PipelineResult {
  FitResult sls;
  CondensationReport condensation;
  FitResult refit;
};

// Layer-regularized fit, clamp and condense at the tolerance, then a warm
// unregularized refit of the condensed network.
PipelineResult sls_then_refit(const DataSet& data, std::span<const std::size_t> widths,
                              std::span<const Activation> activations, const PipelineConfig& cfg);

// Same, continuing from an already fitted layer-regularized network.
PipelineResult condense_and_refit(FitResult sls, const DataSet& data, const PipelineConfig& cfg);

}  // namespace layersparse
