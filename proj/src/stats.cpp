#include "layersparse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "layersparse/errors.hpp"

namespace layersparse {

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ParameterError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ParameterError("quantile level must lie in [0,1], got " + std::to_string(q));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace layersparse
