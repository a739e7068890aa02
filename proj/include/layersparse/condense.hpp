#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "layersparse/matrix.hpp"
#include "layersparse/network.hpp"

namespace layersparse {

/// Active layers of a network, as 1-based layer numbers in increasing order.
/// Layer j < depth is active when W^j has an entry below -tolerance; the
/// innermost layer is always included.
struct ActiveSet {
  std::vector<std::size_t> layers;
  double tolerance = 0.0;

  bool contains(std::size_t layer) const;
  std::size_t size() const noexcept { return layers.size(); }
  // Active layers among 1..depth-1.
  std::size_t hidden_active() const noexcept { return layers.empty() ? 0 : layers.size() - 1; }
  // Throws PreconditionError unless sorted, unique, in range and containing depth.
  void validate(std::size_t depth) const;

  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;
};

enum class CondenseMode { AsStated, Sound };

std::string to_string(CondenseMode mode);
CondenseMode condense_mode_from_string(const std::string& text);

ActiveSet detect_active(const Network& net, double tolerance = 0.0);

// Zeroes entries in [-tolerance, 0) of every layer that detect_active deems
// inactive at `tolerance`, so inactivity becomes exact.
Network clamp_small_negatives(const Network& net, double tolerance);

// Replaces layers j and j+1 (1-based) by one layer with weight
// p_{j+1} W^j W^{j+1} and activation f^j o f^{j+1}. Requires W^j >= 0.
// This is the literal pairwise merge; it is exact only in special cases
// (middle width 1 among them) and otherwise changes the function.
Network merge_pair_as_stated(const Network& net, std::size_t j);

// Block-merge over the ordered active set j_1 < ... < j_s: each active layer
// absorbs the inactive run in front of it with the width-product scale
// p_{j_{i-1}+2} ... p_{j_i}; its activation is the composition over the run.
// Inactive layers must be exactly nonnegative (clamp first).
Network condense_as_stated(const Network& net, const ActiveSet& active);

/// Exact condensation. A layer j < depth is removed when its activation is the
/// identity, or when it is inactive at `tolerance` (after clamping) and f^{j+1}
/// only produces nonnegative values, since then f^j[W^j f^{j+1}[c]] equals
/// W^j f^{j+1}[c]. Removed layers multiply into the surviving layer in front of
/// them. If layer 1 is removed, the output layer becomes an identity layer
/// holding W^1 ... W^{k-1}. An identity innermost layer is removed too.
/// Throws SoundnessError if an inactive non-identity layer sits on top of an
/// activation that can go negative.
Network condense_sound(const Network& net, double tolerance = 0.0);

// Max over probe rows of |f_a(x) - f_b(x)|.
double verify_equivalence(const Network& a, const Network& b, const Matrix& probes);

struct CondensationReport {
  CondenseMode mode = CondenseMode::AsStated;
  std::size_t original_params = 0;
  std::size_t condensed_params = 0;
  ActiveSet active;
  double max_residual = 0.0;
  std::size_t probe_count = 0;
  Network condensed;

  nlohmann::json to_json() const;
};

// Clamp at `tolerance`, detect the active set, condense with `mode` and
// measure the residual against the unclamped network on `probe_count`
// standard-normal probes drawn from `probe_seed`.
CondensationReport condense(const Network& net, CondenseMode mode, double tolerance,
                            std::size_t probe_count, std::uint64_t probe_seed);

}  // namespace layersparse
