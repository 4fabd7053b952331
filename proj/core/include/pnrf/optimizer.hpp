#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pnrf/adam.hpp"
#include "pnrf/field.hpp"
#include "pnrf/grid.hpp"
#include "pnrf/harness.hpp"
#include "pnrf/renderer.hpp"

namespace pnrf {

struct TrainConfig {
  double lr = 5e-4;
  double sparsity_weight = 2e-3;
  int batch_rays = 128;
  int iterations = 1000;
  int prune_grow_interval = 500;  // <= 0 disables point maintenance
  double prune_threshold = 0.1;
  double t_opacity = 0.7;
  double t_dist = 0.0;  // <= 0: mean nearest-neighbor spacing, resolved at maintenance time
  std::uint64_t seed = 0;
  int snapshot_interval = 0;  // <= 0 disables snapshots
  int threads = 1;
  QueryConfig query;
  ShadingConfig shading;
  Vec3 background{0, 0, 0};

  void validate() const;
};

struct LossReport {
  double l_render = 0.0;
  double l_sparse = 0.0;
  double l_opt = 0.0;  // l_render + sparsity_weight * l_sparse
  double psnr = 0.0;
  std::size_t pruned = 0;
  std::size_t grown = 0;
};

struct RayBatch {
  std::vector<Ray> rays;
  std::vector<Vec3> gt;
};

// Everything a training run mutates. Point positions are fixed for the life
// of a point; optimization touches only network weights, point features, and
// confidence logits.
struct TrainState {
  NeuralPointCloud cloud;
  RadianceFieldParams params;
  AdamState f_state;
  AdamState t_state;
  AdamState r_state;
  AdamFlatState feature_state;
  AdamFlatState logit_state;
  std::int64_t iteration = 0;
  std::mt19937_64 rng;
};

// Mean squared color error, averaged over rays and channels.
double render_loss(const std::vector<Vec3>& predicted, const std::vector<Vec3>& target);

// Mean of log(g) + log(1 - g) over the given confidences, each clamped to
// [1e-4, 1 - 1e-4] first. Always <= -2 ln 2, with the maximum at g = 1/2.
double sparsity_loss(const std::vector<double>& gammas);

// Renders the batch, fills `grads` with d(L_opt)/d(weights, features, logits)
// where L_opt = L_render + sparsity_weight * L_sparse, and reports the loss
// terms. Leaves the state untouched; throws std::runtime_error before any
// update if the loss is not finite. `predicted` (optional) receives the
// per-ray colors. Results are bit-identical for any cfg.threads.
LossReport batch_gradients(const TrainState& state, const PerspectiveGrid& grid,
                           const RayBatch& batch, const TrainConfig& cfg,
                           RadianceFieldGrads& grads, std::vector<Vec3>* predicted = nullptr);

// One Adam update of the network weights, point features, and confidence
// logits from the gradients of `batch_gradients`.
LossReport train_step(TrainState& state, const PerspectiveGrid& grid, const RayBatch& batch,
                      const TrainConfig& cfg);

// Removes every point with confidence sigmoid(logit) < threshold, preserving
// order. Returns the number removed; `kept` (optional) receives the surviving
// original indices. Throws when the threshold would empty a non-empty cloud.
std::size_t prune(NeuralPointCloud& cloud, double threshold,
                  std::vector<std::uint32_t>* kept = nullptr);

// Exact mean distance from each point to its nearest other point; 0 when the
// cloud has fewer than two points.
double mean_nearest_neighbor_distance(const NeuralPointCloud& cloud);

struct GrowCandidate {
  Vec3 position;
  double alpha = 0.0;
  double distance = 0.0;  // to the nearest existing point, exact
  std::size_t ray_id = 0;
};

// For each marched ray, the sample with the highest opacity becomes a
// candidate when that opacity exceeds t_opacity and the sample lies farther
// than t_dist from every existing point. At most one candidate per ray.
std::vector<GrowCandidate> collect_grow_candidates(const std::vector<RayMarchState>& rays,
                                                   const NeuralPointCloud& cloud, double t_opacity,
                                                   double t_dist);

// Appends candidates greedily in order, re-checking each against the cloud
// including points accepted earlier in the same call, so accepted points stay
// mutually farther than t_dist apart. New features are the inverse-distance
// blend of the `feature_neighbors` nearest existing points; new confidences
// start at 0.3. Returns the number appended.
std::size_t grow(NeuralPointCloud& cloud, const std::vector<GrowCandidate>& candidates,
                 double t_dist, int feature_neighbors);

struct MaintenanceReport {
  std::size_t pruned = 0;
  std::size_t grown = 0;
};

// One maintenance pass: prune, remap the per-point Adam moments to the
// surviving points, then march a fresh batch of candidate rays and grow.
// Grown points get zeroed Adam moments.
MaintenanceReport prune_and_grow(TrainState& state, const SceneDataset& dataset,
                                 const TrainConfig& cfg);

using SnapshotFn = std::function<void(const TrainState&, std::int64_t)>;

// Runs cfg.iterations training steps, each on a batch of cfg.batch_rays
// pixels drawn from one random training view, with a maintenance pass every
// cfg.prune_grow_interval iterations. Returns metrics CSV rows (header
// included): iter,L_render,L_sparse,L_opt,psnr,n_points,pruned,grown. The rng
// is reseeded from (cfg.seed, state.iteration) so a run is a pure function of
// the starting state and the config.
std::vector<std::string> train(TrainState& state, const SceneDataset& dataset,
                               const TrainConfig& cfg, const SnapshotFn& snapshot = {});

}  // namespace pnrf
