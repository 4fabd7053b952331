#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pnrf/tensor.hpp"

namespace pnrf {

enum class Activation { kNone, kRelu, kSoftplus, kSigmoid };

double apply_activation(Activation a, double z);
double activation_grad_from_pre(Activation a, double z);

// Fully connected network: widths = [in, hidden..., out]. Hidden layers share
// one activation; the output layer gets its own.
struct MlpConfig {
  std::vector<int> widths;
  Activation hidden = Activation::kRelu;
  Activation output = Activation::kNone;

  int layer_count() const { return int(widths.size()) - 1; }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  void validate() const;
};

// Named parameter tensors with matching gradient buffers, insertion-ordered
// so that serialization and Adam sweeps are reproducible.
class ParameterStore {
 public:
  void add(const std::string& name, Tensor value);
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t tensor_count() const { return names_.size(); }
  std::size_t parameter_count() const;
  void zero_grads();

  Tensor& value_at(std::size_t i) { return values_[i]; }
  const Tensor& value_at(std::size_t i) const { return values_[i]; }
  Tensor& grad_at(std::size_t i) { return grads_[i]; }
  const Tensor& grad_at(std::size_t i) const { return grads_[i]; }

  // Adds every gradient tensor of `other` into this store's gradients.
  // Stores must hold identical names and shapes.
  void accumulate_grads_from(const ParameterStore& other);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
};

// Weights are stored as W{i} with shape [in, out] and biases b{i} with shape
// [out], so a forward step is X * W + b on row-major batches.
ParameterStore kaiming_init(const MlpConfig& cfg, std::uint64_t seed);

// Activations recorded by a forward pass; consumed by mlp_backward.
struct MlpTape {
  Tensor input;
  std::vector<Tensor> pre;
  std::vector<Tensor> post;
  bool recorded = false;
};

// input: [batch, in] (or rank-1 [in], treated as batch of one).
// Returns [batch, out]. Pass a tape to enable a later backward pass.
Tensor mlp_forward(const MlpConfig& cfg, const ParameterStore& params, const Tensor& input,
                   MlpTape* tape = nullptr);

// Accumulates parameter gradients (+=) into `grads` (a store with the same
// names and shapes, usually `params` itself) and returns the gradient with
// respect to the forward input. Throws std::logic_error if the tape was not
// recorded.
Tensor mlp_backward(const MlpConfig& cfg, const ParameterStore& params, const MlpTape& tape,
                    const Tensor& output_grad, ParameterStore& grads);

inline Tensor mlp_backward(const MlpConfig& cfg, ParameterStore& params, const MlpTape& tape,
                           const Tensor& output_grad) {
  return mlp_backward(cfg, params, tape, output_grad, params);
}

// A store with the same names and shapes but zeroed values and gradients;
// used as a thread-chunk gradient accumulator.
ParameterStore clone_shapes(const ParameterStore& store);

// NeRF-style positional encoding. Each input scalar p expands to the block
//   [p, sin(2^0 pi p), cos(2^0 pi p), ..., sin(2^{L-1} pi p), cos(2^{L-1} pi p)]
// and blocks are concatenated per component: d inputs -> d * (1 + 2L) outputs.
// L = 0 is the identity map.
Tensor positional_encode(const Tensor& x, int L);

// Chain rule through positional_encode: given d(loss)/d(encoded), returns
// d(loss)/dx. Needed only when encoded quantities are optimized.
Tensor positional_encode_backward(const Tensor& x, int L, const Tensor& encoded_grad);

int encoded_width(int input_width, int L);

}  // namespace pnrf
