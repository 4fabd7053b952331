#include "pnrf/mlp.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>

namespace pnrf {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;

ConstMapMat map2(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMapMat(t.values.data(), Eigen::Index(rows), Eigen::Index(cols));
}

MapMat map2(Tensor& t, std::size_t rows, std::size_t cols) {
  return MapMat(t.values.data(), Eigen::Index(rows), Eigen::Index(cols));
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::kNone: return z;
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kSoftplus: return stable_softplus(z);
    case Activation::kSigmoid: return stable_sigmoid(z);
  }
  return z;
}

double activation_grad_from_pre(Activation a, double z) {
  switch (a) {
    case Activation::kNone: return 1.0;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSoftplus: return stable_sigmoid(z);
    case Activation::kSigmoid: {
      const double s = stable_sigmoid(z);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

void MlpConfig::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp: needs at least one layer");
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("mlp: layer widths must be positive");
  }
}

void ParameterStore::add(const std::string& name, Tensor value) {
  if (has(name)) throw std::invalid_argument("parameter store: duplicate name " + name);
  index_[name] = names_.size();
  names_.push_back(name);
  grads_.push_back(Tensor::zeros(value.shape));
  values_.push_back(std::move(value));
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("parameter store: no tensor named " + name);
  return values_[it->second];
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("parameter store: no tensor named " + name);
  return values_[it->second];
}

Tensor& ParameterStore::grad(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("parameter store: no tensor named " + name);
  return grads_[it->second];
}

const Tensor& ParameterStore::grad(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("parameter store: no tensor named " + name);
  return grads_[it->second];
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : values_) n += t.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (Tensor& g : grads_) g.fill(0.0);
}

void ParameterStore::accumulate_grads_from(const ParameterStore& other) {
  if (other.names_ != names_) throw std::invalid_argument("parameter store: mismatched stores");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    Tensor& dst = grads_[i];
    const Tensor& src = other.grads_[i];
    if (!dst.same_shape(src)) throw std::invalid_argument("parameter store: mismatched shapes");
    for (std::size_t k = 0; k < dst.values.size(); ++k) dst.values[k] += src.values[k];
  }
}

ParameterStore clone_shapes(const ParameterStore& store) {
  ParameterStore out;
  for (const std::string& name : store.names()) {
    out.add(name, Tensor::zeros(store.value(name).shape));
  }
  return out;
}

ParameterStore kaiming_init(const MlpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParameterStore store;
  for (int layer = 0; layer < cfg.layer_count(); ++layer) {
    const int fan_in = cfg.widths[layer];
    const int fan_out = cfg.widths[layer + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
    Tensor w = Tensor::zeros({std::size_t(fan_in), std::size_t(fan_out)});
    for (double& v : w.values) v = dist(rng);
    store.add("W" + std::to_string(layer), std::move(w));
    store.add("b" + std::to_string(layer), Tensor::zeros({std::size_t(fan_out)}));
  }
  return store;
}

Tensor mlp_forward(const MlpConfig& cfg, const ParameterStore& params, const Tensor& input,
                   MlpTape* tape) {
  cfg.validate();
  const std::size_t batch = input.rank() == 1 ? 1 : input.rows();
  const std::size_t in_width = input.rank() == 1 ? input.size() : input.cols();
  if (in_width != std::size_t(cfg.input_width())) {
    throw std::invalid_argument("mlp_forward: input has width " + std::to_string(in_width) +
                                ", config expects " + std::to_string(cfg.input_width()));
  }
  if (tape) {
    tape->input = input;
    tape->pre.assign(std::size_t(cfg.layer_count()), Tensor());
    tape->post.assign(std::size_t(cfg.layer_count()), Tensor());
    tape->recorded = true;
  }

  Tensor current = input;
  current.shape = {batch, in_width};
  for (int layer = 0; layer < cfg.layer_count(); ++layer) {
    const Tensor& w = params.value("W" + std::to_string(layer));
    const Tensor& b = params.value("b" + std::to_string(layer));
    const std::size_t out_width = std::size_t(cfg.widths[layer + 1]);

    Tensor z = Tensor::zeros({batch, out_width});
    if (batch > 0) {
      map2(z, batch, out_width).noalias() =
          map2(current, batch, current.cols()) * map2(w, w.rows(), w.cols());
      map2(z, batch, out_width).rowwise() += ConstMapVec(b.values.data(), Eigen::Index(out_width)).transpose();
    }

    const Activation act = (layer + 1 == cfg.layer_count()) ? cfg.output : cfg.hidden;
    Tensor a = Tensor::zeros({batch, out_width});
    for (std::size_t i = 0; i < z.values.size(); ++i) a.values[i] = apply_activation(act, z.values[i]);

    if (tape) {
      tape->pre[std::size_t(layer)] = std::move(z);
      tape->post[std::size_t(layer)] = a;
    }
    current = std::move(a);
  }
  if (input.rank() == 1) current.shape = {current.size()};
  return current;
}

Tensor mlp_backward(const MlpConfig& cfg, const ParameterStore& params, const MlpTape& tape,
                    const Tensor& output_grad, ParameterStore& grads) {
  cfg.validate();
  if (!tape.recorded) throw std::logic_error("mlp_backward: tape was not recorded");
  const std::size_t batch = tape.input.rank() == 1 ? 1 : tape.input.rows();
  if (shape_product(output_grad.shape) != batch * std::size_t(cfg.output_width())) {
    throw std::invalid_argument("mlp_backward: output_grad shape mismatch");
  }

  // delta starts as d(loss)/d(post-activation) of the last layer
  Tensor delta = output_grad;
  delta.shape = {batch, std::size_t(cfg.output_width())};

  for (int layer = cfg.layer_count() - 1; layer >= 0; --layer) {
    const Activation act = (layer + 1 == cfg.layer_count()) ? cfg.output : cfg.hidden;
    const Tensor& pre = tape.pre[std::size_t(layer)];
    for (std::size_t i = 0; i < delta.values.size(); ++i) {
      delta.values[i] *= activation_grad_from_pre(act, pre.values[i]);
    }

    const std::string wi = "W" + std::to_string(layer);
    const std::string bi = "b" + std::to_string(layer);
    const Tensor& w = params.value(wi);
    const Tensor& below = layer == 0 ? tape.input : tape.post[std::size_t(layer - 1)];
    const std::size_t below_width = std::size_t(cfg.widths[layer]);

    Tensor& wg = grads.grad(wi);
    Tensor& bg = grads.grad(bi);
    if (batch > 0) {
      map2(wg, wg.rows(), wg.cols()).noalias() +=
          map2(below, batch, below_width).transpose() * map2(delta, batch, delta.cols());
      Eigen::Map<Eigen::VectorXd>(bg.values.data(), Eigen::Index(bg.size())) +=
          map2(delta, batch, delta.cols()).colwise().sum().transpose();
    }

    Tensor next = Tensor::zeros({batch, below_width});
    if (batch > 0) {
      map2(next, batch, below_width).noalias() =
          map2(delta, batch, delta.cols()) * map2(w, w.rows(), w.cols()).transpose();
    }
    delta = std::move(next);
  }
  if (tape.input.rank() == 1) delta.shape = {delta.size()};
  return delta;
}

int encoded_width(int input_width, int L) {
  if (L < 0) throw std::invalid_argument("positional_encode: L must be non-negative");
  return input_width * (1 + 2 * L);
}

Tensor positional_encode(const Tensor& x, int L) {
  if (L < 0) throw std::invalid_argument("positional_encode: L must be non-negative");
  if (L == 0) return x;
  const std::size_t batch = x.rank() == 1 ? 1 : x.rows();
  const std::size_t d = x.rank() == 1 ? x.size() : x.cols();
  const std::size_t block = 1 + 2 * std::size_t(L);

  Tensor out = Tensor::zeros({batch, d * block});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* in_row = x.values.data() + r * d;
    double* out_row = out.values.data() + r * d * block;
    for (std::size_t c = 0; c < d; ++c) {
      const double p = in_row[c];
      double* o = out_row + c * block;
      o[0] = p;
      double freq = M_PI;
      for (int l = 0; l < L; ++l) {
        o[1 + 2 * l] = std::sin(freq * p);
        o[2 + 2 * l] = std::cos(freq * p);
        freq *= 2.0;
      }
    }
  }
  if (x.rank() == 1) out.shape = {d * block};
  return out;
}

Tensor positional_encode_backward(const Tensor& x, int L, const Tensor& encoded_grad) {
  if (L == 0) return encoded_grad;
  const std::size_t batch = x.rank() == 1 ? 1 : x.rows();
  const std::size_t d = x.rank() == 1 ? x.size() : x.cols();
  const std::size_t block = 1 + 2 * std::size_t(L);
  if (shape_product(encoded_grad.shape) != batch * d * block) {
    throw std::invalid_argument("positional_encode_backward: gradient shape mismatch");
  }

  Tensor out = Tensor::zeros(x.shape);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* in_row = x.values.data() + r * d;
    const double* g_row = encoded_grad.values.data() + r * d * block;
    double* o_row = out.values.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      const double p = in_row[c];
      const double* g = g_row + c * block;
      double acc = g[0];
      double freq = M_PI;
      for (int l = 0; l < L; ++l) {
        acc += g[1 + 2 * l] * freq * std::cos(freq * p);
        acc -= g[2 + 2 * l] * freq * std::sin(freq * p);
        freq *= 2.0;
      }
      o_row[c] = acc;
    }
  }
  return out;
}

}  // namespace pnrf
