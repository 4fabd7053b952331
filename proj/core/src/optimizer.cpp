#include "pnrf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <utility>

#include "pnrf/math_util.hpp"
#include "pnrf/parallel.hpp"

namespace pnrf {
namespace {

constexpr double kGammaFloor = 1e-4;
constexpr double kGrowConfidence = 0.3;
constexpr double kIdwMinDistance = 1e-6;
constexpr std::size_t kRayChunk = 16;

double clamp_gamma(double g) { return std::clamp(g, kGammaFloor, 1.0 - kGammaFloor); }

double nearest_distance(const Vec3& x, const std::vector<Vec3>& positions) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : positions) best = std::min(best, (x - p).norm());
  return best;
}

void remap_flat(AdamFlatState& state, const std::vector<std::uint32_t>& kept, std::size_t stride) {
  if (state.m.empty()) return;
  std::vector<double> m(kept.size() * stride);
  std::vector<double> v(kept.size() * stride);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    std::copy_n(state.m.begin() + std::ptrdiff_t(kept[j] * stride), stride,
                m.begin() + std::ptrdiff_t(j * stride));
    std::copy_n(state.v.begin() + std::ptrdiff_t(kept[j] * stride), stride,
                v.begin() + std::ptrdiff_t(j * stride));
  }
  state.m = std::move(m);
  state.v = std::move(v);
}

void extend_flat(AdamFlatState& state, std::size_t extra) {
  if (state.m.empty()) return;
  state.m.resize(state.m.size() + extra, 0.0);
  state.v.resize(state.v.size() + extra, 0.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (!std::isfinite(lr) || !(lr > 0.0)) {
    throw std::invalid_argument("train config: lr must be positive");
  }
  if (!std::isfinite(sparsity_weight) || sparsity_weight < 0.0) {
    throw std::invalid_argument("train config: sparsity_weight must be non-negative");
  }
  if (batch_rays < 1) throw std::invalid_argument("train config: batch_rays must be at least 1");
  if (iterations < 0) throw std::invalid_argument("train config: iterations must be non-negative");
  if (!(prune_threshold > 0.0 && prune_threshold < 1.0)) {
    throw std::invalid_argument("train config: prune_threshold must lie in (0, 1)");
  }
  if (!(t_opacity > 0.0 && t_opacity < 1.0)) {
    throw std::invalid_argument("train config: t_opacity must lie in (0, 1)");
  }
  if (!std::isfinite(t_dist)) throw std::invalid_argument("train config: t_dist must be finite");
  if (threads < 1) throw std::invalid_argument("train config: threads must be at least 1");
  if (!std::isfinite(background.x) || !std::isfinite(background.y) ||
      !std::isfinite(background.z)) {
    throw std::invalid_argument("train config: background must be finite");
  }
  query.validate();
  shading.validate();
}

double render_loss(const std::vector<Vec3>& predicted, const std::vector<Vec3>& target) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("render_loss: predicted and target differ in length");
  }
  if (predicted.empty()) throw std::invalid_argument("render_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const Vec3 d = predicted[i] - target[i];
    sum += d.dot(d);
  }
  return sum / (3.0 * double(predicted.size()));
}

double sparsity_loss(const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("sparsity_loss: no confidences");
  double sum = 0.0;
  for (double g : gammas) {
    const double c = clamp_gamma(g);
    sum += std::log(c) + std::log(1.0 - c);
  }
  return sum / double(gammas.size());
}

LossReport batch_gradients(const TrainState& state, const PerspectiveGrid& grid,
                           const RayBatch& batch, const TrainConfig& cfg,
                           RadianceFieldGrads& grads, std::vector<Vec3>* predicted) {
  cfg.validate();
  if (batch.rays.size() != batch.gt.size()) {
    throw std::invalid_argument("batch_gradients: rays and ground truth differ in length");
  }
  if (batch.rays.empty()) throw std::invalid_argument("batch_gradients: empty batch");
  const std::size_t n = batch.rays.size();

  RenderOptions opts;
  opts.background = cfg.background;
  opts.query = cfg.query;
  opts.shading = cfg.shading;

  const std::size_t n_chunks = (n + kRayChunk - 1) / kRayChunk;
  std::vector<RadianceFieldGrads> partial(n_chunks);
  for (RadianceFieldGrads& p : partial) {
    p = RadianceFieldGrads::zeros_like(state.params, state.cloud);
  }
  std::vector<Vec3> colors(n);
  parallel_chunks(n, kRayChunk, cfg.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      RayMarchState march = march_ray(state.cloud, grid, state.params, batch.rays[i], opts, true);
      colors[i] = march.color;
      const Vec3 dcolor = (march.color - batch.gt[i]) * (2.0 / (3.0 * double(n)));
      backward_ray(state.params, state.cloud, march, dcolor, partial[c]);
    }
  });

  grads = RadianceFieldGrads::zeros_like(state.params, state.cloud);
  for (const RadianceFieldGrads& p : partial) grads.accumulate_from(p);

  LossReport rep;
  rep.l_render = render_loss(colors, batch.gt);
  const std::size_t n_points = state.cloud.size();
  if (n_points > 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
      const double gamma = state.cloud.gamma(i);
      const double c = clamp_gamma(gamma);
      sum += std::log(c) + std::log(1.0 - c);
      if (cfg.sparsity_weight > 0.0 && gamma > kGammaFloor && gamma < 1.0 - kGammaFloor) {
        const double dgamma = 1.0 / gamma - 1.0 / (1.0 - gamma);
        grads.gamma_logits[i] +=
            cfg.sparsity_weight * dgamma * gamma * (1.0 - gamma) / double(n_points);
      }
    }
    rep.l_sparse = sum / double(n_points);
  }
  rep.l_opt = rep.l_render + cfg.sparsity_weight * rep.l_sparse;
  rep.psnr = rep.l_render > 0.0 ? 10.0 * std::log10(1.0 / rep.l_render)
                                : std::numeric_limits<double>::infinity();
  if (!std::isfinite(rep.l_opt)) {
    char msg[240];
    std::snprintf(msg, sizeof msg,
                  "batch_gradients: non-finite loss (L_render=%g, L_sparse=%g, %zu rays, "
                  "%zu points, iteration %lld)",
                  rep.l_render, rep.l_sparse, n, n_points, (long long)state.iteration);
    throw std::runtime_error(msg);
  }
  if (predicted) *predicted = std::move(colors);
  return rep;
}

LossReport train_step(TrainState& state, const PerspectiveGrid& grid, const RayBatch& batch,
                      const TrainConfig& cfg) {
  RadianceFieldGrads grads;
  const LossReport rep = batch_gradients(state, grid, batch, cfg, grads);

  state.params.zero_grads();
  state.params.f_net.accumulate_grads_from(grads.f_net);
  state.params.t_net.accumulate_grads_from(grads.t_net);
  state.params.r_net.accumulate_grads_from(grads.r_net);

  AdamConfig acfg;
  acfg.lr = cfg.lr;
  adam_step(state.params.f_net, state.f_state, acfg);
  adam_step(state.params.t_net, state.t_state, acfg);
  adam_step(state.params.r_net, state.r_state, acfg);
  adam_step_flat(state.cloud.features, grads.features, state.feature_state, acfg);
  adam_step_flat(state.cloud.gamma_logits, grads.gamma_logits, state.logit_state, acfg);
  return rep;
}

std::size_t prune(NeuralPointCloud& cloud, double threshold, std::vector<std::uint32_t>* kept_out) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("prune: threshold must lie in (0, 1)");
  }
  std::vector<std::uint32_t> kept;
  kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.gamma(i) >= threshold) kept.push_back(std::uint32_t(i));
  }
  if (kept.empty() && cloud.size() > 0) {
    throw std::runtime_error(
        "prune: every confidence fell below the threshold; lower the threshold or the "
        "sparsity weight");
  }
  const std::size_t removed = cloud.size() - kept.size();
  if (removed > 0) {
    const std::size_t d = std::size_t(cloud.feature_dim);
    std::vector<Vec3> positions(kept.size());
    std::vector<double> features(kept.size() * d);
    std::vector<double> logits(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const std::size_t i = kept[j];
      positions[j] = cloud.positions[i];
      std::copy_n(cloud.features.begin() + std::ptrdiff_t(i * d), d,
                  features.begin() + std::ptrdiff_t(j * d));
      logits[j] = cloud.gamma_logits[i];
    }
    cloud.positions = std::move(positions);
    cloud.features = std::move(features);
    cloud.gamma_logits = std::move(logits);
    ++cloud.generation;
    cloud.validate();
  }
  if (kept_out) *kept_out = std::move(kept);
  return removed;
}

double mean_nearest_neighbor_distance(const NeuralPointCloud& cloud) {
  const std::size_t n = cloud.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (cloud.positions[i] - cloud.positions[j]).norm());
    }
    sum += best;
  }
  return sum / double(n);
}

std::vector<GrowCandidate> collect_grow_candidates(const std::vector<RayMarchState>& rays,
                                                   const NeuralPointCloud& cloud, double t_opacity,
                                                   double t_dist) {
  if (!(t_opacity > 0.0 && t_opacity < 1.0)) {
    throw std::invalid_argument("collect_grow_candidates: t_opacity must lie in (0, 1)");
  }
  if (!(t_dist >= 0.0)) {
    throw std::invalid_argument("collect_grow_candidates: t_dist must be non-negative");
  }
  std::vector<GrowCandidate> out;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const RayMarchState& st = rays[r];
    if (st.alpha.empty()) continue;
    std::size_t j = 0;
    for (std::size_t s = 1; s < st.alpha.size(); ++s) {
      if (st.alpha[s] > st.alpha[j]) j = s;
    }
    if (!(st.alpha[j] > t_opacity)) continue;
    const Vec3 x = st.samples[j].x;
    const double dist = nearest_distance(x, cloud.positions);
    if (!(dist > t_dist)) continue;
    out.push_back({x, st.alpha[j], dist, r});
  }
  return out;
}

std::size_t grow(NeuralPointCloud& cloud, const std::vector<GrowCandidate>& candidates,
                 double t_dist, int feature_neighbors) {
  if (feature_neighbors < 1) {
    throw std::invalid_argument("grow: feature_neighbors must be at least 1");
  }
  if (!(t_dist >= 0.0)) throw std::invalid_argument("grow: t_dist must be non-negative");
  const std::size_t d = std::size_t(cloud.feature_dim);
  std::size_t added = 0;
  for (const GrowCandidate& cand : candidates) {
    if (!(nearest_distance(cand.position, cloud.positions) > t_dist)) continue;

    std::vector<std::pair<double, std::uint32_t>> order(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      order[i] = {(cand.position - cloud.positions[i]).norm(), std::uint32_t(i)};
    }
    const std::size_t k = std::min(std::size_t(feature_neighbors), order.size());
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end());
    std::vector<double> dists(k);
    for (std::size_t j = 0; j < k; ++j) dists[j] = order[j].first;
    const std::vector<double> weights = inverse_distance_weights(dists, kIdwMinDistance);

    std::vector<double> feature(d, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double* row = cloud.feature_row(order[j].second);
      for (std::size_t c = 0; c < d; ++c) feature[c] += weights[j] * row[c];
    }
    cloud.positions.push_back(cand.position);
    cloud.features.insert(cloud.features.end(), feature.begin(), feature.end());
    cloud.gamma_logits.push_back(logit(kGrowConfidence));
    ++added;
  }
  if (added > 0) {
    ++cloud.generation;
    cloud.validate();
  }
  return added;
}

MaintenanceReport prune_and_grow(TrainState& state, const SceneDataset& dataset,
                                 const TrainConfig& cfg) {
  cfg.validate();
  MaintenanceReport rep;
  const std::size_t d = std::size_t(state.cloud.feature_dim);

  std::vector<std::uint32_t> kept;
  rep.pruned = prune(state.cloud, cfg.prune_threshold, &kept);
  if (rep.pruned > 0) {
    remap_flat(state.feature_state, kept, d);
    remap_flat(state.logit_state, kept, 1);
  }

  const double t_dist =
      cfg.t_dist > 0.0 ? cfg.t_dist : mean_nearest_neighbor_distance(state.cloud);

  const std::vector<const DatasetView*> views = dataset.train_views();
  if (views.empty()) throw std::invalid_argument("prune_and_grow: dataset has no training views");
  std::uniform_int_distribution<std::size_t> pick_view(0, views.size() - 1);
  const DatasetView& view = *views[pick_view(state.rng)];
  const PerspectiveGrid grid = build_index(state.cloud, view.camera, cfg.query);

  RenderOptions opts;
  opts.background = cfg.background;
  opts.query = cfg.query;
  opts.shading = cfg.shading;
  const std::size_t n = std::size_t(cfg.batch_rays);
  std::vector<Ray> rays(n);
  std::uniform_int_distribution<int> px(0, view.image.width - 1);
  std::uniform_int_distribution<int> py(0, view.image.height - 1);
  for (std::size_t i = 0; i < n; ++i) {
    rays[i] = generate_ray(view.camera, px(state.rng), py(state.rng));
  }
  std::vector<RayMarchState> marches(n);
  parallel_chunks(n, kRayChunk, cfg.threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      marches[i] = march_ray(state.cloud, grid, state.params, rays[i], opts, false);
    }
  });

  const std::vector<GrowCandidate> candidates =
      collect_grow_candidates(marches, state.cloud, cfg.t_opacity, t_dist);
  rep.grown = grow(state.cloud, candidates, t_dist, cfg.query.k);
  if (rep.grown > 0) {
    extend_flat(state.feature_state, rep.grown * d);
    extend_flat(state.logit_state, rep.grown);
  }
  return rep;
}

std::vector<std::string> train(TrainState& state, const SceneDataset& dataset,
                               const TrainConfig& cfg, const SnapshotFn& snapshot) {
  cfg.validate();
  const std::vector<const DatasetView*> views = dataset.train_views();
  if (views.empty()) throw std::invalid_argument("train: dataset has no training views");

  std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32),
                    std::uint32_t(std::uint64_t(state.iteration)),
                    std::uint32_t(std::uint64_t(state.iteration) >> 32)};
  state.rng.seed(seq);

  std::vector<std::string> rows;
  rows.reserve(std::size_t(cfg.iterations) + 1);
  rows.emplace_back("iter,L_render,L_sparse,L_opt,psnr,n_points,pruned,grown");

  std::uniform_int_distribution<std::size_t> pick_view(0, views.size() - 1);
  for (int it = 1; it <= cfg.iterations; ++it) {
    const DatasetView& view = *views[pick_view(state.rng)];
    const PerspectiveGrid grid = build_index(state.cloud, view.camera, cfg.query);
    RayBatch batch;
    batch.rays.reserve(std::size_t(cfg.batch_rays));
    batch.gt.reserve(std::size_t(cfg.batch_rays));
    std::uniform_int_distribution<int> px(0, view.image.width - 1);
    std::uniform_int_distribution<int> py(0, view.image.height - 1);
    for (int b = 0; b < cfg.batch_rays; ++b) {
      const int x = px(state.rng);
      const int y = py(state.rng);
      batch.rays.push_back(generate_ray(view.camera, x, y));
      batch.gt.push_back(view.image.get(x, y));
    }

    LossReport rep = train_step(state, grid, batch, cfg);
    ++state.iteration;
    if (cfg.prune_grow_interval > 0 && it % cfg.prune_grow_interval == 0) {
      const MaintenanceReport m = prune_and_grow(state, dataset, cfg);
      rep.pruned = m.pruned;
      rep.grown = m.grown;
    }

    char row[256];
    std::snprintf(row, sizeof row, "%lld,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%zu",
                  (long long)state.iteration, rep.l_render, rep.l_sparse, rep.l_opt, rep.psnr,
                  state.cloud.size(), rep.pruned, rep.grown);
    rows.emplace_back(row);

    if (snapshot && cfg.snapshot_interval > 0 && it % cfg.snapshot_interval == 0) {
      snapshot(state, state.iteration);
    }
  }
  return rows;
}

}  // namespace pnrf
