#include "layersparse/condense.hpp"

#include <algorithm>
#include <cmath>

#include "layersparse/errors.hpp"
#include "layersparse/regularizers.hpp"
#include "layersparse/rng.hpp"

namespace layersparse {

bool ActiveSet::contains(std::size_t layer) const {
  return std::binary_search(layers.begin(), layers.end(), layer);
}

void ActiveSet::validate(std::size_t depth) const {
  if (layers.empty() || layers.back() != depth) {
    throw PreconditionError("active set must contain the innermost layer " + std::to_string(depth));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] < 1 || layers[i] > depth) {
      throw PreconditionError("active layer " + std::to_string(layers[i]) + " outside 1.." +
                              std::to_string(depth));
    }
    if (i > 0 && layers[i] <= layers[i - 1]) {
      throw PreconditionError("active set must be strictly increasing");
    }
  }
}

std::string to_string(CondenseMode mode) {
  return mode == CondenseMode::AsStated ? "as-stated" : "sound";
}

CondenseMode condense_mode_from_string(const std::string& text) {
  if (text == "as-stated") return CondenseMode::AsStated;
  if (text == "sound") return CondenseMode::Sound;
  throw ParameterError("unknown condensation mode \"" + text + "\" (expected as-stated or sound)");
}

ActiveSet detect_active(const Network& net, double tolerance) {
  if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be nonnegative");
  ActiveSet s;
  s.tolerance = tolerance;
  const std::size_t l = net.depth();
  for (std::size_t layer = 1; layer < l; ++layer) {
    if (net.weight(layer - 1).min_entry() < -tolerance) s.layers.push_back(layer);
  }
  s.layers.push_back(l);
  return s;
}

Network clamp_small_negatives(const Network& net, double tolerance) {
  const ActiveSet active = detect_active(net, tolerance);
  Network out = net;
  for (std::size_t layer = 1; layer < net.depth(); ++layer) {
    if (active.contains(layer)) continue;
    for (double& v : out.weight(layer - 1).data()) {
      if (v < 0.0) v = 0.0;  // every negative entry here lies in [-tolerance, 0)
    }
  }
  return out;
}

namespace {

void require_nonnegative(const Network& net, std::size_t layer, const char* hint) {
  const Matrix& w = net.weight(layer - 1);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      if (w(r, c) < 0.0) {
        throw PreconditionError("layer " + std::to_string(layer) + " is not inactive: entry (" +
                                std::to_string(r) + "," + std::to_string(c) + ") = " +
                                std::to_string(w(r, c)) + hint);
      }
    }
  }
}

}  // namespace

Network merge_pair_as_stated(const Network& net, std::size_t j) {
  const std::size_t l = net.depth();
  if (j < 1 || j >= l) {
    throw PreconditionError("merge index " + std::to_string(j) + " outside 1.." + std::to_string(l - 1));
  }
  require_nonnegative(net, j, "");
  const Matrix& outer = net.weight(j - 1);
  const Matrix& inner = net.weight(j);
  const double middle = static_cast<double>(outer.cols());
  std::vector<Matrix> weights;
  std::vector<Activation> acts;
  for (std::size_t k = 0; k < l; ++k) {
    if (k == j - 1) {
      weights.push_back(scaled(matmul(outer, inner), middle));
      acts.push_back(compose(net.activation(k), net.activation(k + 1)));
    } else if (k != j) {
      weights.push_back(net.weight(k));
      acts.push_back(net.activation(k));
    }
  }
  return Network(std::move(weights), std::move(acts));
}

Network condense_as_stated(const Network& net, const ActiveSet& active) {
  const std::size_t l = net.depth();
  active.validate(l);
  for (std::size_t layer = 1; layer < l; ++layer) {
    if (!active.contains(layer)) {
      require_nonnegative(net, layer, "; clamp small negatives before condensing");
    }
  }
  const auto widths = net.widths();
  std::vector<Matrix> weights;
  std::vector<Activation> acts;
  std::size_t previous = 0;  // j_0 := 0
  for (std::size_t layer : active.layers) {
    // Block covers layers previous+1 .. layer.
    Matrix block = net.weight(previous);
    Activation act = net.activation(previous);
    double scale = 1.0;
    for (std::size_t k = previous + 2; k <= layer; ++k) {
      block = matmul(block, net.weight(k - 1));
      act = compose(act, net.activation(k - 1));
      scale *= static_cast<double>(widths[k - 1]);  // p_k
    }
    weights.push_back(scale == 1.0 ? std::move(block) : scaled(block, scale));
    acts.push_back(act);
    previous = layer;
  }
  return Network(std::move(weights), std::move(acts));
}

Network condense_sound(const Network& original, double tolerance) {
  const Network net = clamp_small_negatives(original, tolerance);
  const std::size_t l = net.depth();
  const ActiveSet active = detect_active(net, 0.0);

  // removed[k] for zero-based layer index k.
  std::vector<bool> removed(l, false);
  for (std::size_t k = 0; k < l; ++k) {
    const Activation& act = net.activation(k);
    if (act.kind == ActivationKind::Identity) {
      removed[k] = true;
      continue;
    }
    if (k + 1 == l || active.contains(k + 1)) continue;
    const Activation& inner = net.activation(k + 1);
    if (!inner.nonnegative_valued()) {
      throw SoundnessError("layer " + std::to_string(k + 1) + " is inactive but its inner activation " +
                           inner.name() + " can produce negative values, so " + act.name() +
                           " cannot be removed exactly");
    }
    removed[k] = true;
  }

  // Each block starts at the output layer or at a surviving layer and absorbs
  // the removed layers behind it.
  std::vector<Matrix> weights;
  std::vector<Activation> acts;
  std::size_t k = 0;
  while (k < l) {
    Matrix block = net.weight(k);
    std::size_t next = k + 1;
    while (next < l && removed[next]) block = matmul(block, net.weight(next++));
    weights.push_back(std::move(block));
    acts.push_back(k == 0 && removed[0] ? Activation::identity() : net.activation(k));
    k = next;
  }
  return Network(std::move(weights), std::move(acts));
}

double verify_equivalence(const Network& a, const Network& b, const Matrix& probes) {
  if (a.input_dim() != b.input_dim() || probes.cols() != a.input_dim()) {
    throw ShapeError("verify_equivalence: input dimensions differ (" + std::to_string(a.input_dim()) +
                     ", " + std::to_string(b.input_dim()) + ", probes " +
                     std::to_string(probes.cols()) + ")");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    const auto x = probes.row(i);
    worst = std::max(worst, std::abs(forward(a, x) - forward(b, x)));
  }
  return worst;
}

nlohmann::json CondensationReport::to_json() const {
  return {{"mode", to_string(mode)},
          {"active_layers", active.layers},
          {"tolerance", active.tolerance},
          {"original_params", original_params},
          {"condensed_params", condensed_params},
          {"original_depth", active.layers.empty() ? 0 : active.layers.back()},
          {"condensed_depth", condensed.depth()},
          {"probe_count", probe_count},
          {"max_residual", max_residual}};
}

CondensationReport condense(const Network& net, CondenseMode mode, double tolerance,
                            std::size_t probe_count, std::uint64_t probe_seed) {
  const Network clamped = clamp_small_negatives(net, tolerance);
  ActiveSet active = detect_active(clamped, 0.0);
  active.tolerance = tolerance;
  Network condensed = mode == CondenseMode::AsStated ? condense_as_stated(clamped, active)
                                                     : condense_sound(clamped, 0.0);
  RngStream rng = RngStream(probe_seed).child("condense-probes");
  const Matrix probes = sample_std_normal(rng, probe_count, net.input_dim());
  CondensationReport report{mode,
                            param_count(net),
                            param_count(condensed),
                            std::move(active),
                            0.0,
                            probe_count,
                            std::move(condensed)};
  report.max_residual = verify_equivalence(net, report.condensed, probes);
  return report;
}

}  // namespace layersparse
