#include "layersparse/rng.hpp"

#include <cmath>
#include <numbers>

#include "layersparse/errors.hpp"

namespace layersparse {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed) : key_(splitmix64_mix(seed + kGolden)), state_(key_) {}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return splitmix64_mix(state_);
}

double RngStream::next_unit() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv;
}

double RngStream::next_normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("next_below: bound must be positive");
  // Lemire's multiply-shift; bias is below 2^-64 * bound and irrelevant here.
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * bound;
  return static_cast<std::uint64_t>(wide >> 64);
}

RngStream RngStream::child(std::string_view label, std::uint64_t index) const {
  const std::uint64_t tag = splitmix64_mix(fnv1a64(label) + index * kGolden);
  return RngStream(splitmix64_mix(key_ ^ tag), true);
}

Matrix sample_uniform(RngStream& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
  if (!(lo < hi)) {
    throw ParameterError("sample_uniform: need lo < hi, got lo=" + std::to_string(lo) +
                         " hi=" + std::to_string(hi));
  }
  Matrix m(rows, cols);
  const double width = hi - lo;
  for (double& v : m.data()) v = lo + width * rng.next_unit();
  return m;
}

Matrix sample_std_normal(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.next_normal();
  return m;
}

std::vector<int> sample_bernoulli(RngStream& rng, double p, std::size_t count) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("sample_bernoulli: p must lie in [0,1], got " + std::to_string(p));
  }
  std::vector<int> out(count);
  for (int& b : out) b = rng.next_unit() < p ? 1 : 0;
  return out;
}

}  // namespace layersparse
