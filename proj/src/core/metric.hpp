#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace gsr {

// Squared L2 distance accumulated in double over four fixed lanes, combined
// as (l0 + l1) + (l2 + l3). This summation order is the definition of the
// metric everywhere in the engine; index and exhaustive paths both use it.
inline double squared_l2(const float* x, const float* y, std::size_t dim) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    const double d0 = static_cast<double>(x[i]) - y[i];
    const double d1 = static_cast<double>(x[i + 1]) - y[i + 1];
    const double d2 = static_cast<double>(x[i + 2]) - y[i + 2];
    const double d3 = static_cast<double>(x[i + 3]) - y[i + 3];
    l0 += d0 * d0;
    l1 += d1 * d1;
    l2 += d2 * d2;
    l3 += d3 * d3;
  }
  for (; i < dim; ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    l0 += d * d;
  }
  return (l0 + l1) + (l2 + l3);
}

inline double l2_distance(const float* x, const float* y, std::size_t dim) {
  return std::sqrt(squared_l2(x, y, dim));
}

inline double l2_distance(std::span<const float> x, std::span<const float> y) {
  return l2_distance(x.data(), y.data(), x.size());
}

// Negative L2 distance; nonpositive.
inline double similarity(std::span<const float> x, std::span<const float> y) {
  return -l2_distance(x, y);
}

}  // namespace gsr
