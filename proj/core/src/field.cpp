#include "pnrf/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace pnrf {
namespace {

constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

void copy_block(Tensor& dst, std::size_t col_offset, const Tensor& src) {
  const std::size_t rows = src.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    std::memcpy(dst.row(r) + col_offset, src.row(r), src.cols() * sizeof(double));
  }
}

}  // namespace

void FieldConfig::validate() const {
  if (feature_dim <= 0) throw std::invalid_argument("field config: feature_dim must be positive");
  if (processed_dim <= 0) throw std::invalid_argument("field config: processed_dim must be positive");
  if (f_hidden <= 0 || t_hidden <= 0 || r_hidden <= 0) {
    throw std::invalid_argument("field config: hidden widths must be positive");
  }
  if (position_bands < 0 || direction_bands < 0 || feature_bands < 0) {
    throw std::invalid_argument("field config: encoding bands must be non-negative");
  }
  if (!(min_distance > 0.0)) {
    throw std::invalid_argument("field config: min_distance must be positive");
  }
}

int FieldConfig::f_input_width() const {
  return encoded_width(3, position_bands) + encoded_width(feature_dim, feature_bands);
}

int FieldConfig::r_input_width() const {
  return processed_dim + encoded_width(3, direction_bands);
}

MlpConfig FieldConfig::f_config() const {
  return {{f_input_width(), f_hidden, processed_dim}, Activation::kRelu, Activation::kNone};
}

MlpConfig FieldConfig::t_config() const {
  return {{processed_dim, t_hidden, 1}, Activation::kRelu, Activation::kSoftplus};
}

MlpConfig FieldConfig::r_config() const {
  return {{r_input_width(), r_hidden, r_hidden, 3}, Activation::kRelu, Activation::kSigmoid};
}

RadianceFieldParams RadianceFieldParams::create(const FieldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RadianceFieldParams params;
  params.config = cfg;
  params.f_net = kaiming_init(cfg.f_config(), seed);
  params.t_net = kaiming_init(cfg.t_config(), seed + 1);
  params.r_net = kaiming_init(cfg.r_config(), seed + 2);
  return params;
}

std::size_t RadianceFieldParams::parameter_count() const {
  return f_net.parameter_count() + t_net.parameter_count() + r_net.parameter_count();
}

void RadianceFieldParams::zero_grads() {
  f_net.zero_grads();
  t_net.zero_grads();
  r_net.zero_grads();
}

RadianceFieldGrads RadianceFieldGrads::zeros_like(const RadianceFieldParams& params,
                                                  const NeuralPointCloud& cloud) {
  RadianceFieldGrads g;
  g.f_net = clone_shapes(params.f_net);
  g.t_net = clone_shapes(params.t_net);
  g.r_net = clone_shapes(params.r_net);
  g.features.assign(cloud.features.size(), 0.0);
  g.gamma_logits.assign(cloud.gamma_logits.size(), 0.0);
  return g;
}

void RadianceFieldGrads::accumulate_from(const RadianceFieldGrads& other) {
  f_net.accumulate_grads_from(other.f_net);
  t_net.accumulate_grads_from(other.t_net);
  r_net.accumulate_grads_from(other.r_net);
  if (other.features.size() != features.size() ||
      other.gamma_logits.size() != gamma_logits.size()) {
    throw std::invalid_argument("field grads: mismatched cloud sizes");
  }
  for (std::size_t i = 0; i < features.size(); ++i) features[i] += other.features[i];
  for (std::size_t i = 0; i < gamma_logits.size(); ++i) gamma_logits[i] += other.gamma_logits[i];
}

void RadianceFieldGrads::zero() {
  f_net.zero_grads();
  t_net.zero_grads();
  r_net.zero_grads();
  std::fill(features.begin(), features.end(), 0.0);
  std::fill(gamma_logits.begin(), gamma_logits.end(), 0.0);
}

std::vector<double> inverse_distance_weights(const std::vector<double>& dists,
                                             double min_distance) {
  std::vector<double> w(dists.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    w[i] = 1.0 / std::max(dists[i], min_distance);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

Tensor per_point_feature(const RadianceFieldParams& params, std::span<const double> feature,
                         const Vec3& x_minus_p) {
  const FieldConfig& cfg = params.config;
  if (feature.size() != std::size_t(cfg.feature_dim)) {
    throw std::invalid_argument("per_point_feature: feature has width " +
                                std::to_string(feature.size()) + ", config expects " +
                                std::to_string(cfg.feature_dim));
  }
  const Tensor enc_rel =
      positional_encode(Tensor::from_vector({x_minus_p.x, x_minus_p.y, x_minus_p.z}),
                        cfg.position_bands);
  Tensor raw = Tensor::zeros({feature.size()});
  std::copy(feature.begin(), feature.end(), raw.values.begin());
  const Tensor enc_feat = positional_encode(raw, cfg.feature_bands);

  Tensor in = Tensor::zeros({std::size_t(cfg.f_input_width())});
  std::copy(enc_rel.values.begin(), enc_rel.values.end(), in.values.begin());
  std::copy(enc_feat.values.begin(), enc_feat.values.end(),
            in.values.begin() + enc_rel.size());
  return mlp_forward(cfg.f_config(), params.f_net, in);
}

Tensor aggregate_feature(const std::vector<Tensor>& per_point,
                         const std::vector<double>& gammas, const std::vector<double>& dists,
                         double min_distance) {
  if (per_point.size() != gammas.size() || per_point.size() != dists.size()) {
    throw std::invalid_argument("aggregate_feature: mismatched list lengths");
  }
  if (per_point.empty()) return Tensor();
  const std::size_t width = per_point[0].size();
  Tensor out = Tensor::zeros({width});
  const std::vector<double> w = inverse_distance_weights(dists, min_distance);
  for (std::size_t i = 0; i < per_point.size(); ++i) {
    if (per_point[i].size() != width) {
      throw std::invalid_argument("aggregate_feature: mismatched feature widths");
    }
    const double coef = gammas[i] * w[i];
    for (std::size_t c = 0; c < width; ++c) out.values[c] += coef * per_point[i].values[c];
  }
  return out;
}

DensityResult density_at(const RadianceFieldParams& params, const std::vector<Tensor>& per_point,
                         const std::vector<double>& gammas, const std::vector<double>& dists) {
  if (per_point.size() != gammas.size() || per_point.size() != dists.size()) {
    throw std::invalid_argument("density_at: mismatched list lengths");
  }
  DensityResult result;
  if (per_point.empty()) return result;
  const std::vector<double> w = inverse_distance_weights(dists, params.config.min_distance);
  result.per_point.resize(per_point.size());
  for (std::size_t i = 0; i < per_point.size(); ++i) {
    const Tensor t = mlp_forward(params.config.t_config(), params.t_net, per_point[i]);
    result.per_point[i] = t.values[0];
    result.sigma += gammas[i] * w[i] * result.per_point[i];
  }
  return result;
}

Vec3 radiance_at(const RadianceFieldParams& params, const Tensor& aggregated, const Vec3& dir) {
  const FieldConfig& cfg = params.config;
  if (aggregated.size() != std::size_t(cfg.processed_dim)) {
    throw std::invalid_argument("radiance_at: aggregated feature has wrong width");
  }
  const Tensor enc_dir =
      positional_encode(Tensor::from_vector({dir.x, dir.y, dir.z}), cfg.direction_bands);
  Tensor in = Tensor::zeros({std::size_t(cfg.r_input_width())});
  std::copy(aggregated.values.begin(), aggregated.values.end(), in.values.begin());
  std::copy(enc_dir.values.begin(), enc_dir.values.end(),
            in.values.begin() + aggregated.size());
  const Tensor out = mlp_forward(cfg.r_config(), params.r_net, in);
  return {out.values[0], out.values[1], out.values[2]};
}

ShadingResult evaluate(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                       const PerspectiveGrid& grid, const Vec3& x, const Vec3& dir,
                       const QueryConfig& cfg) {
  ShadingResult result;
  result.neighbors = query_neighbors(grid, cloud, x, cfg);
  const std::size_t k = result.neighbors.indices.size();
  if (k == 0) return result;

  std::vector<Tensor> per_point(k);
  std::vector<double> gammas(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint32_t pt = result.neighbors.indices[i];
    per_point[i] = per_point_feature(
        params, std::span<const double>(cloud.feature_row(pt), std::size_t(cloud.feature_dim)),
        x - cloud.positions[pt]);
    gammas[i] = cloud.gamma(pt);
  }
  result.weights =
      inverse_distance_weights(result.neighbors.distances, params.config.min_distance);
  const Tensor aggregated =
      aggregate_feature(per_point, gammas, result.neighbors.distances, params.config.min_distance);
  DensityResult density = density_at(params, per_point, gammas, result.neighbors.distances);
  result.sigma = density.sigma;
  result.per_point_sigma = std::move(density.per_point);
  result.radiance = radiance_at(params, aggregated, dir);
  return result;
}

FieldBatch field_forward(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                         const std::vector<FieldSample>& samples, bool record) {
  const FieldConfig& cfg = params.config;
  const std::size_t n_samples = samples.size();

  FieldBatch batch;
  batch.sigma.assign(n_samples, 0.0);
  batch.radiance.assign(n_samples, Vec3{0.0, 0.0, 0.0});
  batch.recorded = record;

  std::size_t rows = 0;
  for (const FieldSample& s : samples) rows += s.neighbors.indices.size();

  batch.row_sample.reserve(rows);
  batch.row_point.reserve(rows);
  batch.row_weight.reserve(rows);
  batch.row_gamma.reserve(rows);
  Tensor rel = Tensor::zeros({rows, 3});
  Tensor raw_feat = Tensor::zeros({rows, std::size_t(cfg.feature_dim)});

  for (std::size_t j = 0; j < n_samples; ++j) {
    const FieldSample& s = samples[j];
    const std::size_t k = s.neighbors.indices.size();
    if (k == 0) continue;
    batch.active.push_back(std::uint32_t(j));
    const std::vector<double> w =
        inverse_distance_weights(s.neighbors.distances, cfg.min_distance);
    for (std::size_t i = 0; i < k; ++i) {
      const std::uint32_t pt = s.neighbors.indices[i];
      const std::size_t r = batch.row_sample.size();
      batch.row_sample.push_back(std::uint32_t(j));
      batch.row_point.push_back(pt);
      batch.row_weight.push_back(w[i]);
      batch.row_gamma.push_back(cloud.gamma(pt));
      const Vec3 d = s.x - cloud.positions[pt];
      rel.at(r, 0) = d.x;
      rel.at(r, 1) = d.y;
      rel.at(r, 2) = d.z;
      std::memcpy(raw_feat.row(r), cloud.feature_row(pt),
                  std::size_t(cfg.feature_dim) * sizeof(double));
    }
  }

  if (rows > 0) {
    const Tensor enc_rel = positional_encode(rel, cfg.position_bands);
    const Tensor enc_feat = positional_encode(raw_feat, cfg.feature_bands);
    Tensor f_in = Tensor::zeros({rows, std::size_t(cfg.f_input_width())});
    copy_block(f_in, 0, enc_rel);
    copy_block(f_in, enc_rel.cols(), enc_feat);

    batch.f_out =
        mlp_forward(cfg.f_config(), params.f_net, f_in, record ? &batch.f_tape : nullptr);
    const Tensor t_out =
        mlp_forward(cfg.t_config(), params.t_net, batch.f_out, record ? &batch.t_tape : nullptr);
    batch.row_sigma.assign(t_out.values.begin(), t_out.values.end());

    const std::size_t n_active = batch.active.size();
    const std::size_t c2 = std::size_t(cfg.processed_dim);
    Tensor aggregated = Tensor::zeros({n_samples, c2});
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t j = batch.row_sample[r];
      const double coef = batch.row_gamma[r] * batch.row_weight[r];
      const double* src = batch.f_out.row(r);
      double* dst = aggregated.row(j);
      for (std::size_t c = 0; c < c2; ++c) dst[c] += coef * src[c];
      batch.sigma[j] += coef * batch.row_sigma[r];
    }

    Tensor dirs = Tensor::zeros({n_active, 3});
    for (std::size_t a = 0; a < n_active; ++a) {
      const Vec3& d = samples[batch.active[a]].dir;
      dirs.at(a, 0) = d.x;
      dirs.at(a, 1) = d.y;
      dirs.at(a, 2) = d.z;
    }
    const Tensor enc_dir = positional_encode(dirs, cfg.direction_bands);
    Tensor r_in = Tensor::zeros({n_active, std::size_t(cfg.r_input_width())});
    for (std::size_t a = 0; a < n_active; ++a) {
      std::memcpy(r_in.row(a), aggregated.row(batch.active[a]), c2 * sizeof(double));
    }
    copy_block(r_in, c2, enc_dir);
    const Tensor r_out =
        mlp_forward(cfg.r_config(), params.r_net, r_in, record ? &batch.r_tape : nullptr);
    for (std::size_t a = 0; a < n_active; ++a) {
      batch.radiance[batch.active[a]] =
          Vec3{r_out.at(a, 0), r_out.at(a, 1), r_out.at(a, 2)};
    }
  }
  return batch;
}

void field_backward(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                    const std::vector<FieldSample>& samples, const FieldBatch& batch,
                    const std::vector<double>& dsigma, const std::vector<Vec3>& dradiance,
                    RadianceFieldGrads& grads) {
  const FieldConfig& cfg = params.config;
  const std::size_t n_samples = samples.size();
  if (!batch.recorded) throw std::logic_error("field_backward: batch was not recorded");
  if (batch.sigma.size() != n_samples || dsigma.size() != n_samples ||
      dradiance.size() != n_samples) {
    throw std::invalid_argument("field_backward: sample count mismatch");
  }

  const std::size_t rows = batch.row_sample.size();
  const std::size_t n_active = batch.active.size();
  const std::size_t c2 = std::size_t(cfg.processed_dim);

  Tensor dagg = Tensor::zeros({n_active, c2});
  if (n_active > 0) {
    Tensor dr_out = Tensor::zeros({n_active, 3});
    for (std::size_t a = 0; a < n_active; ++a) {
      const Vec3& g = dradiance[batch.active[a]];
      dr_out.at(a, 0) = g.x;
      dr_out.at(a, 1) = g.y;
      dr_out.at(a, 2) = g.z;
    }
    const Tensor dr_in =
        mlp_backward(cfg.r_config(), params.r_net, batch.r_tape, dr_out, grads.r_net);
    for (std::size_t a = 0; a < n_active; ++a) {
      std::memcpy(dagg.row(a), dr_in.row(a), c2 * sizeof(double));
    }
  }

  if (rows == 0) return;
  std::vector<std::uint32_t> active_slot(n_samples, kNoSlot);
  for (std::size_t a = 0; a < n_active; ++a) active_slot[batch.active[a]] = std::uint32_t(a);

  Tensor dt_out = Tensor::zeros({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = batch.row_sample[r];
    dt_out.values[r] = dsigma[j] * batch.row_gamma[r] * batch.row_weight[r];
  }
  Tensor df_out =
      mlp_backward(cfg.t_config(), params.t_net, batch.t_tape, dt_out, grads.t_net);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = batch.row_sample[r];
    const double* dfx = dagg.row(active_slot[j]);
    const double* fix = batch.f_out.row(r);
    const double gamma = batch.row_gamma[r];
    const double weight = batch.row_weight[r];
    const double coef = gamma * weight;
    double* out_row = df_out.row(r);

    double feat_dot = 0.0;
    for (std::size_t c = 0; c < c2; ++c) {
      feat_dot += dfx[c] * fix[c];
      out_row[c] += coef * dfx[c];
    }
    const double dgamma = weight * (batch.row_sigma[r] * dsigma[j] + feat_dot);
    grads.gamma_logits[batch.row_point[r]] += dgamma * gamma * (1.0 - gamma);
  }

  const Tensor df_in =
      mlp_backward(cfg.f_config(), params.f_net, batch.f_tape, df_out, grads.f_net);

  const std::size_t enc_rel_width = std::size_t(encoded_width(3, cfg.position_bands));
  const std::size_t feat_dim = std::size_t(cfg.feature_dim);
  if (cfg.feature_bands == 0) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = df_in.row(r) + enc_rel_width;
      double* dst = grads.features.data() + std::size_t(batch.row_point[r]) * feat_dim;
      for (std::size_t c = 0; c < feat_dim; ++c) dst[c] += src[c];
    }
  } else {
    const std::size_t enc_feat_width = std::size_t(encoded_width(cfg.feature_dim, cfg.feature_bands));
    Tensor raw = Tensor::zeros({rows, feat_dim});
    Tensor denc = Tensor::zeros({rows, enc_feat_width});
    for (std::size_t r = 0; r < rows; ++r) {
      std::memcpy(raw.row(r), cloud.feature_row(batch.row_point[r]), feat_dim * sizeof(double));
      std::memcpy(denc.row(r), df_in.row(r) + enc_rel_width, enc_feat_width * sizeof(double));
    }
    const Tensor draw = positional_encode_backward(raw, cfg.feature_bands, denc);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = draw.row(r);
      double* dst = grads.features.data() + std::size_t(batch.row_point[r]) * feat_dim;
      for (std::size_t c = 0; c < feat_dim; ++c) dst[c] += src[c];
    }
  }
}

}  // namespace pnrf
