#include "pnrf/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "pnrf/math_util.hpp"
#include "pnrf/pointgen.hpp"
#include "pnrf/tensor_io.hpp"

namespace pnrf {
namespace {

constexpr double kGammaFloor = 1e-4;
constexpr const char* kNetPrefixes[3] = {"f", "t", "r"};

std::vector<const ParameterStore*> net_stores(const RadianceFieldParams& params) {
  return {&params.f_net, &params.t_net, &params.r_net};
}

Tensor flat_tensor(const std::vector<double>& values) {
  Tensor t = Tensor::zeros({values.size()});
  std::copy(values.begin(), values.end(), t.values.begin());
  return t;
}

using TensorMap = std::unordered_map<std::string, Tensor>;

TensorMap load_tensor_map(const std::filesystem::path& path) {
  TensorMap map;
  for (NamedTensor& t : load_tensors(path)) {
    if (!map.emplace(t.name, std::move(t.tensor)).second) {
      throw std::runtime_error("load_checkpoint: duplicate tensor '" + t.name + "' in " +
                               path.string());
    }
  }
  return map;
}

const Tensor& require_tensor(const TensorMap& map, const std::string& name,
                             const std::filesystem::path& path) {
  auto it = map.find(name);
  if (it == map.end()) {
    throw std::runtime_error("load_checkpoint: missing tensor '" + name + "' in " + path.string());
  }
  return it->second;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state,
                     const RunConfig& cfg) {
  std::filesystem::create_directories(dir);

  PlyCloud ply;
  ply.positions = state.cloud.positions;
  ply.features = state.cloud.features;
  ply.feature_dim = state.cloud.feature_dim;
  ply.confidences.resize(state.cloud.size());
  for (std::size_t i = 0; i < state.cloud.size(); ++i) ply.confidences[i] = state.cloud.gamma(i);
  save_ply(dir / "points.ply", ply, true);

  std::vector<NamedTensor> weights;
  const std::vector<const ParameterStore*> stores = net_stores(state.params);
  for (std::size_t s = 0; s < stores.size(); ++s) {
    for (const std::string& name : stores[s]->names()) {
      weights.push_back({std::string(kNetPrefixes[s]) + "." + name, stores[s]->value(name)});
    }
  }
  save_tensors(dir / "mlp.bin", weights);

  std::vector<NamedTensor> moments;
  const AdamState* net_states[3] = {&state.f_state, &state.t_state, &state.r_state};
  for (std::size_t s = 0; s < 3; ++s) {
    const AdamState& a = *net_states[s];
    const std::vector<std::string> names = stores[s]->names();
    if (a.m.empty()) continue;
    if (a.m.size() != names.size() || a.v.size() != names.size()) {
      throw std::invalid_argument("save_checkpoint: Adam moments do not match the parameters");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string base = std::string("adam.") + kNetPrefixes[s] + "." + names[i];
      moments.push_back({base + ".m", a.m[i]});
      moments.push_back({base + ".v", a.v[i]});
    }
  }
  if (!state.feature_state.m.empty()) {
    moments.push_back({"adam.features.m", flat_tensor(state.feature_state.m)});
    moments.push_back({"adam.features.v", flat_tensor(state.feature_state.v)});
  }
  if (!state.logit_state.m.empty()) {
    moments.push_back({"adam.logits.m", flat_tensor(state.logit_state.m)});
    moments.push_back({"adam.logits.v", flat_tensor(state.logit_state.v)});
  }
  Tensor counters = Tensor::zeros({6});
  counters.values[0] = double(state.f_state.step_count);
  counters.values[1] = double(state.t_state.step_count);
  counters.values[2] = double(state.r_state.step_count);
  counters.values[3] = double(state.feature_state.step_count);
  counters.values[4] = double(state.logit_state.step_count);
  counters.values[5] = double(state.iteration);
  moments.push_back({"counters", counters});
  save_tensors(dir / "train_state.bin", moments);

  std::ofstream meta(dir / "meta.txt");
  if (!meta) throw std::runtime_error("save_checkpoint: cannot open " + (dir / "meta.txt").string());
  meta << write_config_text(cfg);
  if (!meta) throw std::runtime_error("save_checkpoint: write failed for meta.txt");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint out;
  std::ifstream meta(dir / "meta.txt");
  if (!meta) throw std::runtime_error("load_checkpoint: cannot open " + (dir / "meta.txt").string());
  std::ostringstream buf;
  buf << meta.rdbuf();
  out.config = parse_config_text(buf.str());
  out.config.validate();

  const PlyCloud ply = load_ply(dir / "points.ply");
  if (ply.feature_dim != out.config.field.feature_dim) {
    throw std::runtime_error("load_checkpoint: points.ply carries " +
                             std::to_string(ply.feature_dim) + " feature channels, meta.txt says " +
                             std::to_string(out.config.field.feature_dim));
  }
  if (ply.confidences.size() != ply.positions.size()) {
    throw std::runtime_error("load_checkpoint: points.ply lacks confidences");
  }
  TrainState& state = out.state;
  state.cloud.feature_dim = ply.feature_dim;
  state.cloud.positions = ply.positions;
  state.cloud.features = ply.features;
  state.cloud.gamma_logits.resize(ply.confidences.size());
  for (std::size_t i = 0; i < ply.confidences.size(); ++i) {
    state.cloud.gamma_logits[i] =
        logit(std::clamp(double(ply.confidences[i]), kGammaFloor, 1.0 - kGammaFloor));
  }
  state.cloud.validate();

  const std::filesystem::path mlp_path = dir / "mlp.bin";
  TensorMap weights = load_tensor_map(mlp_path);
  state.params = RadianceFieldParams::create(out.config.field, 0);
  std::vector<const ParameterStore*> stores = net_stores(state.params);
  ParameterStore* mutable_stores[3] = {&state.params.f_net, &state.params.t_net,
                                       &state.params.r_net};
  std::size_t expected = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (const std::string& name : stores[s]->names()) {
      const Tensor& t = require_tensor(weights, std::string(kNetPrefixes[s]) + "." + name, mlp_path);
      Tensor& dst = mutable_stores[s]->value(name);
      if (!dst.same_shape(t)) {
        throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " +
                                 t.shape_string() + ", expected " + dst.shape_string());
      }
      dst.values = t.values;
      ++expected;
    }
  }
  if (weights.size() != expected) {
    throw std::runtime_error("load_checkpoint: mlp.bin holds unexpected tensors");
  }

  const std::filesystem::path ts_path = dir / "train_state.bin";
  TensorMap moments = load_tensor_map(ts_path);
  const Tensor& counters = require_tensor(moments, "counters", ts_path);
  if (counters.size() != 6) throw std::runtime_error("load_checkpoint: malformed counters");
  AdamState* net_states[3] = {&state.f_state, &state.t_state, &state.r_state};
  for (std::size_t s = 0; s < 3; ++s) {
    net_states[s]->step_count = std::int64_t(counters.values[s]);
    const std::string first =
        std::string("adam.") + kNetPrefixes[s] + "." + stores[s]->names().front() + ".m";
    if (!moments.count(first)) continue;
    for (const std::string& name : stores[s]->names()) {
      const std::string base = std::string("adam.") + kNetPrefixes[s] + "." + name;
      const Tensor& m = require_tensor(moments, base + ".m", ts_path);
      const Tensor& v = require_tensor(moments, base + ".v", ts_path);
      if (!m.same_shape(stores[s]->value(name)) || !v.same_shape(stores[s]->value(name))) {
        throw std::runtime_error("load_checkpoint: moment shapes for '" + name +
                                 "' do not match the weights");
      }
      net_states[s]->m.push_back(m);
      net_states[s]->v.push_back(v);
    }
  }
  auto load_flat = [&](const char* key, AdamFlatState& flat, std::int64_t steps,
                       std::size_t expected_size) {
    flat.step_count = steps;
    const std::string m_name = std::string("adam.") + key + ".m";
    if (!moments.count(m_name)) return;
    const Tensor& m = require_tensor(moments, m_name, ts_path);
    const Tensor& v = require_tensor(moments, std::string("adam.") + key + ".v", ts_path);
    if (m.size() != expected_size || v.size() != expected_size) {
      throw std::runtime_error(std::string("load_checkpoint: '") + key +
                               "' moments do not match the cloud");
    }
    flat.m.assign(m.values.begin(), m.values.end());
    flat.v.assign(v.values.begin(), v.values.end());
  };
  load_flat("features", state.feature_state, std::int64_t(counters.values[3]),
            state.cloud.features.size());
  load_flat("logits", state.logit_state, std::int64_t(counters.values[4]),
            state.cloud.size());
  state.iteration = std::int64_t(counters.values[5]);
  return out;
}

}  // namespace pnrf
