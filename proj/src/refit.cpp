#include "layersparse/refit.hpp"

#include "layersparse/errors.hpp"

namespace layersparse {

std::vector<std::pair<std::size_t, std::size_t>> CondensedSpace::shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) out.emplace_back(widths[i], widths[i + 1]);
  return out;
}

CondensedSpace condensed_space(const ActiveSet& active, std::span<const std::size_t> widths,
                               std::span<const Activation> activations) {
  if (widths.size() < 2 || activations.size() + 1 != widths.size()) {
    throw ShapeError("condensed_space: need depth+1 widths and depth activations");
  }
  const std::size_t depth = activations.size();
  active.validate(depth);
  CondensedSpace space{active, {widths[0]}, {}};
  std::size_t previous = 0;
  for (std::size_t layer : active.layers) {
    Activation act = activations[previous];
    for (std::size_t k = previous + 2; k <= layer; ++k) act = compose(act, activations[k - 1]);
    space.activations.push_back(act);
    space.widths.push_back(widths[layer]);  // p_{layer+1}
    previous = layer;
  }
  return space;
}

CondensedSpace space_of(const Network& net) {
  ActiveSet all;
  for (std::size_t j = 1; j <= net.depth(); ++j) all.layers.push_back(j);
  const auto widths = net.widths();
  return condensed_space(all, widths, net.activations());
}

FitResult refit(const CondensedSpace& space, const DataSet& data, const TrainConfig& cfg,
                const std::optional<Network>& warm) {
  Network start = [&] {
    if (warm) {
      const auto have = warm->widths();
      if (have != space.widths || warm->activations() != space.activations) {
        throw ShapeError("warm-start network does not match the condensed architecture");
      }
      return *warm;
    }
    RngStream rng = RngStream(cfg.seed).child("refit-init");
    return initialize_network(space.widths, space.activations, cfg.init, rng);
  }();
  return sgd_fit(start, data, cfg, RegWeights::zero(space.depth()));
}

PipelineResult condense_and_refit(FitResult sls, const DataSet& data, const PipelineConfig& cfg) {
  CondensationReport report =
      condense(sls.net, cfg.mode, cfg.tolerance, cfg.probe_count, cfg.train.seed);
  const TrainConfig& refit_cfg = cfg.refit_train ? *cfg.refit_train : cfg.train;
  FitResult refitted = refit(space_of(report.condensed), data, refit_cfg, report.condensed);
  return {std::move(sls), std::move(report), std::move(refitted)};
}

PipelineResult sls_then_refit(const DataSet& data, std::span<const std::size_t> widths,
                              std::span<const Activation> activations, const PipelineConfig& cfg) {
  RngStream rng = RngStream(cfg.train.seed).child("init");
  const Network start = initialize_network(widths, activations, cfg.train.init, rng);
  const RegWeights reg = RegWeights::layer_only(start.depth(), cfg.layer_weight);
  return condense_and_refit(sgd_fit(start, data, cfg.train, reg), data, cfg);
}

}  // namespace layersparse
