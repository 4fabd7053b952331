#include "pnrf/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pnrf {
namespace {

void update_span(double* w, double* g, double* m, double* v, std::size_t n, const AdamConfig& cfg,
                 double bias1, double bias2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    w[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    g[i] = 0.0;
  }
}

}  // namespace

void adam_step(ParameterStore& params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (std::size_t i = 0; i < params.tensor_count(); ++i) {
      state.m.push_back(Tensor::zeros(params.value_at(i).shape));
      state.v.push_back(Tensor::zeros(params.value_at(i).shape));
    }
  }
  if (state.m.size() != params.tensor_count()) {
    throw std::invalid_argument("adam_step: state does not match parameter store");
  }
  ++state.step_count;
  const double bias1 = 1.0 - std::pow(cfg.beta1, double(state.step_count));
  const double bias2 = 1.0 - std::pow(cfg.beta2, double(state.step_count));
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    Tensor& w = params.value_at(i);
    Tensor& g = params.grad_at(i);
    if (!state.m[i].same_shape(w)) throw std::invalid_argument("adam_step: moment shape mismatch");
    update_span(w.values.data(), g.values.data(), state.m[i].values.data(), state.v[i].values.data(),
                w.size(), cfg, bias1, bias2);
  }
}

void adam_step_flat(std::vector<double>& weights, std::vector<double>& grads, AdamFlatState& state,
                    const AdamConfig& cfg) {
  if (state.m.empty() && !weights.empty()) {
    state.m.assign(weights.size(), 0.0);
    state.v.assign(weights.size(), 0.0);
  }
  if (grads.size() != weights.size() || state.m.size() != weights.size()) {
    throw std::invalid_argument("adam_step_flat: buffer sizes disagree");
  }
  ++state.step_count;
  const double bias1 = 1.0 - std::pow(cfg.beta1, double(state.step_count));
  const double bias2 = 1.0 - std::pow(cfg.beta2, double(state.step_count));
  update_span(weights.data(), grads.data(), state.m.data(), state.v.data(), weights.size(), cfg,
              bias1, bias2);
}

}  // namespace pnrf
