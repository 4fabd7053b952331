#pragma once

#include <cstdint>
#include <vector>

#include "pnrf/math_util.hpp"
#include "pnrf/vec3.hpp"

namespace pnrf {

// A point cloud where every point carries a learned feature vector and a
// confidence logit. gamma(i) = sigmoid(logit) is the point's confidence in
// (0, 1); storing the logit keeps the confidence inside its open interval
// under unconstrained optimization.
struct NeuralPointCloud {
  int feature_dim = 0;
  std::vector<Vec3> positions;
  std::vector<double> features;      // size() * feature_dim, row per point
  std::vector<double> gamma_logits;  // size()

  // Bumped by any mutation that adds, removes, or moves points; spatial
  // indices remember the value they were built from.
  std::uint64_t generation = 0;

  std::size_t size() const { return positions.size(); }

  double gamma(std::size_t i) const { return sigmoid(gamma_logits[i]); }

  double* feature_row(std::size_t i) { return features.data() + i * std::size_t(feature_dim); }
  const double* feature_row(std::size_t i) const {
    return features.data() + i * std::size_t(feature_dim);
  }

  void validate() const;
};

}  // namespace pnrf
