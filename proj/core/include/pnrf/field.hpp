#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnrf/grid.hpp"
#include "pnrf/mlp.hpp"
#include "pnrf/point_cloud.hpp"
#include "pnrf/tensor.hpp"
#include "pnrf/vec3.hpp"

namespace pnrf {

// Architecture of the radiance field: a per-point network F turns a stored
// point feature plus the encoded offset to the query position into a
// processed feature, a density head T maps a processed feature to a raw
// density, and a radiance head R maps the aggregated feature plus the encoded
// view direction to RGB.
struct FieldConfig {
  int feature_dim = 59;  // stored feature channels per point
  int processed_dim = 128;
  int f_hidden = 256;
  int t_hidden = 256;
  int r_hidden = 128;
  int position_bands = 6;   // frequency bands for the relative position
  int direction_bands = 4;  // frequency bands for the view direction
  int feature_bands = 0;    // frequency bands for the stored feature (0 = raw)
  double min_distance = 1e-6;

  void validate() const;

  int f_input_width() const;
  int r_input_width() const;

  MlpConfig f_config() const;  // relu hidden, linear output
  MlpConfig t_config() const;  // relu hidden, softplus output (density >= 0)
  MlpConfig r_config() const;  // relu hidden, sigmoid output (rgb in (0,1))
};

struct RadianceFieldParams {
  FieldConfig config;
  ParameterStore f_net;
  ParameterStore t_net;
  ParameterStore r_net;

  static RadianceFieldParams create(const FieldConfig& cfg, std::uint64_t seed);

  std::size_t parameter_count() const;
  void zero_grads();
};

// Gradient accumulator covering everything the optimizer updates: the three
// networks plus the cloud's per-point features and confidence logits. Point
// positions are fixed and receive no gradient.
struct RadianceFieldGrads {
  ParameterStore f_net;
  ParameterStore t_net;
  ParameterStore r_net;
  std::vector<double> features;      // cloud.size() * feature_dim
  std::vector<double> gamma_logits;  // cloud.size()

  static RadianceFieldGrads zeros_like(const RadianceFieldParams& params,
                                       const NeuralPointCloud& cloud);

  void accumulate_from(const RadianceFieldGrads& other);
  void zero();
};

// Result of evaluating the field at one shading point.
struct ShadingResult {
  double sigma = 0.0;
  Vec3 radiance{0.0, 0.0, 0.0};
  std::vector<double> per_point_sigma;  // per neighbor, post-activation
  std::vector<double> weights;          // normalized inverse-distance weights
  NeighborSet neighbors;
};

// Inverse-distance weights w_i = 1 / max(dist_i, min_distance), normalized to
// sum to one. Empty input gives an empty result.
std::vector<double> inverse_distance_weights(const std::vector<double>& dists,
                                             double min_distance);

// Processed feature of one neighbor at offset x - p from the query position:
//   F([encode(x - p), encode(f)])
// Depends on the query and point positions only through their difference.
Tensor per_point_feature(const RadianceFieldParams& params, std::span<const double> feature,
                         const Vec3& x_minus_p);

// Confidence-scaled inverse-distance aggregation:
//   f_x = sum_i gamma_i * w_i / (sum_j w_j) * f_{i,x}
// The weights are normalized over all neighbors before the confidence factor
// is applied, so low-confidence neighbors dilute rather than renormalize.
Tensor aggregate_feature(const std::vector<Tensor>& per_point,
                         const std::vector<double>& gammas, const std::vector<double>& dists,
                         double min_distance);

struct DensityResult {
  double sigma = 0.0;
  std::vector<double> per_point;  // softplus(T(f_{i,x})) per neighbor
};

// Per-neighbor densities softplus(T(f_{i,x})), aggregated with the same
// confidence-scaled weights as the feature. Empty input gives sigma = 0.
DensityResult density_at(const RadianceFieldParams& params, const std::vector<Tensor>& per_point,
                         const std::vector<double>& gammas, const std::vector<double>& dists);

// Radiance for an aggregated feature viewed from unit direction `dir`:
//   R([f_x, encode(dir)])
Vec3 radiance_at(const RadianceFieldParams& params, const Tensor& aggregated, const Vec3& dir);

// Full evaluation at one point: neighbor query, per-point processing,
// aggregation, density, radiance. An empty neighbor set yields sigma = 0 and
// black radiance (such samples are skipped by the renderer). This is the
// single-sample reference path; rendering uses the batched evaluator below.
ShadingResult evaluate(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                       const PerspectiveGrid& grid, const Vec3& x, const Vec3& dir,
                       const QueryConfig& cfg);

// -------------------------------------------------------------------------
// Batched evaluation. All neighbors of all samples are flattened into one
// matrix per network so each layer runs as a single matrix product; a
// recorded batch supports reverse mode back to the networks, the per-point
// features, and the confidence logits.

struct FieldSample {
  Vec3 x;
  Vec3 dir;
  NeighborSet neighbors;
};

struct FieldBatch {
  std::vector<double> sigma;   // per sample
  std::vector<Vec3> radiance;  // per sample

  // recorded state (filled when record = true)
  bool recorded = false;
  std::vector<std::uint32_t> row_sample;  // flattened neighbor rows
  std::vector<std::uint32_t> row_point;
  std::vector<double> row_weight;  // normalized inverse-distance weight
  std::vector<double> row_gamma;
  std::vector<double> row_sigma;      // per-neighbor density
  std::vector<std::uint32_t> active;  // samples with at least one neighbor
  Tensor f_out;                       // [rows, processed_dim]
  MlpTape f_tape;
  MlpTape t_tape;
  MlpTape r_tape;
};

FieldBatch field_forward(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                         const std::vector<FieldSample>& samples, bool record);

// Accumulates gradients of a scalar loss into `grads`, given the loss
// gradients with respect to every sample's sigma and radiance. The batch must
// have been recorded over the same samples.
void field_backward(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                    const std::vector<FieldSample>& samples, const FieldBatch& batch,
                    const std::vector<double>& dsigma, const std::vector<Vec3>& dradiance,
                    RadianceFieldGrads& grads);

}  // namespace pnrf
