#pragma once

#include <cstdint>
#include <vector>

#include "pnrf/mlp.hpp"

namespace pnrf {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment buffers, parallel to a ParameterStore's tensors.
// Moments are allocated lazily on the first step.
struct AdamState {
  std::int64_t step_count = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// Bias-corrected Adam update; gradients are consumed and zeroed.
void adam_step(ParameterStore& params, AdamState& state, const AdamConfig& cfg);

// Same update for a flat array (point features and confidence logits live in
// flat per-cloud buffers, not in a ParameterStore).
struct AdamFlatState {
  std::int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

void adam_step_flat(std::vector<double>& weights, std::vector<double>& grads, AdamFlatState& state,
                    const AdamConfig& cfg);

}  // namespace pnrf
