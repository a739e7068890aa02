#pragma once

#include <span>

namespace layersparse {

// Linear-interpolation sample quantile ("type 7"): with the sample sorted
// ascending and h = (n - 1) q, returns x[floor h] + (h - floor h)(x[ceil h] -
// x[floor h]) using zero-based ranks. Throws ParameterError on empty input or
// q outside [0, 1].
double quantile(std::span<const double> values, double q);

inline double median(std::span<const double> values) { return quantile(values, 0.5); }

}  // namespace layersparse
