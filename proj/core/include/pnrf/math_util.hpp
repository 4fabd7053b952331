#pragma once

#include <cmath>

namespace pnrf {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// Inverse of sigmoid; caller guarantees 0 < p < 1.
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace pnrf
