#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "layersparse/matrix.hpp"

namespace layersparse {

/// Seeded SplitMix64 stream.
///
/// Output sequence: state += 0x9E3779B97F4A7C15, then the standard SplitMix64
/// finalizer (xor-shift 30, *0xBF58476D1CE4E5B9, xor-shift 27,
/// *0x94D049BB133111EB, xor-shift 31) is applied to the new state.
///
/// Child streams are keyed by (parent key, label, index) and never touch the
/// parent's position: child key = mix(parent key ^ mix(fnv1a64(label) + index *
/// 0x9E3779B97F4A7C15)). A child's initial state equals its key.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53-bit resolution:
  // ((next_u64() >> 11) + 0.5) * 2^-53.
  double next_unit();
  // Standard normal via Box-Muller. Draws come in pairs (cos branch first);
  // the sin branch is cached and returned by the following call.
  double next_normal();
  // Uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound);

  RngStream child(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t key() const noexcept { return key_; }

 private:
  RngStream(std::uint64_t key, bool /*tag*/) : key_(key), state_(key) {}
  std::uint64_t key_;
  std::uint64_t state_;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

// Entries uniform on (lo, hi); consumes exactly rows*cols unit draws.
Matrix sample_uniform(RngStream& rng, double lo, double hi, std::size_t rows, std::size_t cols);
Matrix sample_std_normal(RngStream& rng, std::size_t rows, std::size_t cols);
std::vector<int> sample_bernoulli(RngStream& rng, double p, std::size_t count);

}  // namespace layersparse
