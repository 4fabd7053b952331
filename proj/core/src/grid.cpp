#include "pnrf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace pnrf {
namespace {

constexpr std::uint64_t kOutsideKey = ~std::uint64_t(0);
constexpr std::int64_t kAxisLimit = std::int64_t(1) << 21;

struct ProjectedPoint {
  PerspectiveCoord pc;
  double z = 0.0;
  bool valid = false;
};

std::uint64_t pack_cell(std::int64_t i, std::int64_t j, std::int64_t k) {
  if (i < 0 || j < 0 || k < 0 || i >= kAxisLimit || j >= kAxisLimit || k >= kAxisLimit) {
    return kOutsideKey;
  }
  return (std::uint64_t(i) << 42) | (std::uint64_t(j) << 21) | std::uint64_t(k);
}

// Occupied-cell count if the projected bounding box were split into n cells
// per axis; used to pick the default cell size.
std::size_t occupied_for_splits(const std::vector<ProjectedPoint>& pts, double min_u, double min_v,
                                double min_w, double cu, double cv, double cw) {
  std::unordered_set<std::uint64_t> cells;
  cells.reserve(pts.size());
  for (const ProjectedPoint& p : pts) {
    if (!p.valid) continue;
    const auto i = std::int64_t(std::floor((p.pc.u - min_u) / cu));
    const auto j = std::int64_t(std::floor((p.pc.v - min_v) / cv));
    const auto k = std::int64_t(std::floor((p.pc.w - min_w) / cw));
    cells.insert(pack_cell(i, j, k));
  }
  return cells.size();
}

}  // namespace

void QueryConfig::validate() const {
  if (k < 1) throw std::invalid_argument("query: K must be at least 1");
  if (extent < 0) throw std::invalid_argument("query: extent must be non-negative");
  const bool any = cell_u > 0.0 || cell_v > 0.0 || cell_w > 0.0;
  const bool all = cell_u > 0.0 && cell_v > 0.0 && cell_w > 0.0;
  if (any && !all) {
    throw std::invalid_argument("query: cell sizes must be all positive or all auto");
  }
}

void ShadingConfig::validate() const {
  if (max_samples < 1) throw std::invalid_argument("shading: max_samples must be at least 1");
  if (extent < 0) throw std::invalid_argument("shading: extent must be non-negative");
}

std::uint64_t PerspectiveGrid::key_of(const CellCoord& c) const {
  return pack_cell(c.i - min_cell_.i, c.j - min_cell_.j, c.k - min_cell_.k);
}

PerspectiveGrid::CellCoord PerspectiveGrid::cell_of(const PerspectiveCoord& pc) const {
  return {std::int64_t(std::floor((pc.u - origin_u_) / cell_u_)),
          std::int64_t(std::floor((pc.v - origin_v_) / cell_v_)),
          std::int64_t(std::floor((pc.w - origin_w_) / cell_w_))};
}

const std::vector<std::uint32_t>* PerspectiveGrid::cell_points(const CellCoord& c) const {
  const std::uint64_t key = key_of(c);
  if (key == kOutsideKey) return nullptr;
  const auto it = cells_.find(key);
  return it == cells_.end() ? nullptr : &it->second;
}

bool PerspectiveGrid::neighborhood_occupied(const CellCoord& c, int extent) const {
  for (std::int64_t di = -extent; di <= extent; ++di) {
    for (std::int64_t dj = -extent; dj <= extent; ++dj) {
      for (std::int64_t dk = -extent; dk <= extent; ++dk) {
        if (cell_points({c.i + di, c.j + dj, c.k + dk}) != nullptr) return true;
      }
    }
  }
  return false;
}

std::vector<std::size_t> PerspectiveGrid::occupancy_histogram() const {
  std::vector<std::size_t> counts;
  counts.reserve(cells_.size());
  for (const auto& [key, pts] : cells_) counts.push_back(pts.size());
  std::sort(counts.begin(), counts.end());
  return counts;
}

PerspectiveGrid build_index(const NeuralPointCloud& cloud, const CameraModel& camera,
                            const QueryConfig& cfg) {
  cfg.validate();
  cloud.validate();

  PerspectiveGrid grid;
  grid.camera_ = camera;
  grid.cloud_generation_ = cloud.generation;

  std::vector<ProjectedPoint> projected(cloud.size());
  double min_u = 0, max_u = 0, min_v = 0, max_v = 0, min_w = 0, max_w = 0;
  bool first = true;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ProjectedPoint& p = projected[i];
    if (!try_world_to_perspective(camera, cloud.positions[i], &p.pc)) {
      ++grid.skipped_;
      continue;
    }
    p.z = 1.0 / p.pc.w;
    p.valid = true;
    ++grid.registered_;
    if (first) {
      min_u = max_u = p.pc.u;
      min_v = max_v = p.pc.v;
      min_w = max_w = p.pc.w;
      first = false;
    } else {
      min_u = std::min(min_u, p.pc.u);
      max_u = std::max(max_u, p.pc.u);
      min_v = std::min(min_v, p.pc.v);
      max_v = std::max(max_v, p.pc.v);
      min_w = std::min(min_w, p.pc.w);
      max_w = std::max(max_w, p.pc.w);
    }
  }

  grid.origin_u_ = min_u;
  grid.origin_v_ = min_v;
  grid.origin_w_ = min_w;

  if (grid.registered_ == 0) {
    grid.cell_u_ = grid.cell_v_ = grid.cell_w_ = 1.0;
    return grid;
  }

  const double eu = std::max(max_u - min_u, 0.0);
  const double ev = std::max(max_v - min_v, 0.0);
  const double ew = std::max(max_w - min_w, 0.0);
  auto cell_for = [](double extent, int n) { return extent > 0.0 ? extent / n : 1.0; };

  if (cfg.cell_u > 0.0 && cfg.cell_v > 0.0 && cfg.cell_w > 0.0) {
    grid.cell_u_ = cfg.cell_u;
    grid.cell_v_ = cfg.cell_v;
    grid.cell_w_ = cfg.cell_w;
  } else {
    // Split the bounding box into n cells per axis, choosing n so that an
    // occupied cell holds about 4 points. Occupancy decreases with n, so a
    // bisection over n converges; ties go to the closer occupancy.
    const double target = 4.0;
    int lo = 1, hi = 2048;
    auto occupancy = [&](int n) {
      const std::size_t occ = occupied_for_splits(projected, min_u, min_v, min_w,
                                                  cell_for(eu, n), cell_for(ev, n), cell_for(ew, n));
      return double(grid.registered_) / double(occ);
    };
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (occupancy(mid) >= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const int n = std::abs(occupancy(lo) - target) <= std::abs(occupancy(hi) - target) ? lo : hi;
    grid.cell_u_ = cell_for(eu, n);
    grid.cell_v_ = cell_for(ev, n);
    grid.cell_w_ = cell_for(ew, n);
  }

  // register points; origin is the bbox minimum so cell indices start at 0
  grid.min_cell_ = {0, 0, 0};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!projected[i].valid) continue;
    const PerspectiveGrid::CellCoord c = grid.cell_of(projected[i].pc);
    grid.max_cell_.i = std::max(grid.max_cell_.i, c.i);
    grid.max_cell_.j = std::max(grid.max_cell_.j, c.j);
    grid.max_cell_.k = std::max(grid.max_cell_.k, c.k);
    grid.cells_[grid.key_of(c)].push_back(std::uint32_t(i));
  }

  // default query radius: world diagonal of one cell at the median depth
  std::vector<double> depths;
  depths.reserve(grid.registered_);
  for (const ProjectedPoint& p : projected) {
    if (p.valid) depths.push_back(p.z);
  }
  std::nth_element(depths.begin(), depths.begin() + depths.size() / 2, depths.end());
  const double zm = depths[depths.size() / 2];
  const double dx = grid.cell_u_ * zm / camera.fx();
  const double dy = grid.cell_v_ * zm / camera.fy();
  const double dz = grid.cell_w_ * zm * zm;
  grid.default_radius_ = std::sqrt(dx * dx + dy * dy + dz * dz);

  const auto [z_min_it, z_max_it] = std::minmax_element(depths.begin(), depths.end());
  // pad the march slab by two w-cells plus the query radius so boundary
  // samples that still see neighbors are not clipped away
  const double z_min = *z_min_it, z_max = *z_max_it;
  const double pad_lo = 2.0 * grid.cell_w_ * z_min * z_min + grid.default_radius_;
  const double pad_hi = 2.0 * grid.cell_w_ * z_max * z_max + grid.default_radius_;
  grid.z_lo_ = std::max(z_min - pad_lo, 1e-9);
  grid.z_hi_ = z_max + pad_hi;
  return grid;
}

NeighborSet query_neighbors(const PerspectiveGrid& grid, const NeuralPointCloud& cloud,
                            const Vec3& x, const QueryConfig& cfg) {
  cfg.validate();
  NeighborSet result;
  PerspectiveCoord pc;
  if (!try_world_to_perspective(grid.camera(), x, &pc)) return result;
  const double radius = cfg.radius > 0.0 ? cfg.radius : grid.default_radius();

  const PerspectiveGrid::CellCoord center = grid.cell_of(pc);
  std::vector<std::pair<double, std::uint32_t>> candidates;
  for (std::int64_t di = -cfg.extent; di <= cfg.extent; ++di) {
    for (std::int64_t dj = -cfg.extent; dj <= cfg.extent; ++dj) {
      for (std::int64_t dk = -cfg.extent; dk <= cfg.extent; ++dk) {
        const auto* pts = grid.cell_points({center.i + di, center.j + dj, center.k + dk});
        if (!pts) continue;
        for (std::uint32_t idx : *pts) {
          const double dist = distance(cloud.positions[idx], x);
          if (dist <= radius) candidates.emplace_back(dist, idx);
        }
      }
    }
  }

  std::sort(candidates.begin(), candidates.end());
  if (candidates.size() > std::size_t(cfg.k)) candidates.resize(std::size_t(cfg.k));
  result.indices.reserve(candidates.size());
  result.distances.reserve(candidates.size());
  for (const auto& [dist, idx] : candidates) {
    result.indices.push_back(idx);
    result.distances.push_back(dist);
  }
  return result;
}

ShadingPoints place_shading_points(const Ray& ray, const PerspectiveGrid& grid,
                                   const ShadingConfig& cfg) {
  cfg.validate();
  ray.validate();

  ShadingPoints out;
  out.step = cfg.step > 0.0 ? cfg.step : 0.5 * grid.default_radius();
  if (grid.point_count() == 0) return out;
  if (!(out.step > 0.0)) throw std::invalid_argument("shading: step must resolve positive");

  // camera-space depth along the ray is affine in t
  const CameraModel& cam = grid.camera();
  const auto& r = cam.rotation();
  const double z_o = r[6] * ray.origin.x + r[7] * ray.origin.y + r[8] * ray.origin.z +
                     cam.translation().z;
  const double z_d = r[6] * ray.direction.x + r[7] * ray.direction.y + r[8] * ray.direction.z;

  double lo = ray.t_near, hi = ray.t_far;
  if (std::abs(z_d) < 1e-15) {
    if (z_o < grid.z_lo() || z_o > grid.z_hi()) return out;
  } else {
    double ta = (grid.z_lo() - z_o) / z_d;
    double tb = (grid.z_hi() - z_o) / z_d;
    if (ta > tb) std::swap(ta, tb);
    lo = std::max(lo, ta);
    hi = std::min(hi, tb);
  }
  if (!(lo < hi)) return out;

  const double span = hi - lo;
  const auto steps = std::uint64_t(span / out.step);
  for (std::uint64_t j = 0; j < steps; ++j) {
    const double t = lo + (double(j) + 0.5) * out.step;
    PerspectiveCoord pc;
    if (!try_world_to_perspective(cam, ray.at(t), &pc)) continue;
    if (!grid.neighborhood_occupied(grid.cell_of(pc), cfg.extent)) continue;
    out.t.push_back(t);
    if (out.t.size() >= std::size_t(cfg.max_samples)) break;
  }

  out.delta.resize(out.t.size());
  for (std::size_t j = 0; j + 1 < out.t.size(); ++j) out.delta[j] = out.t[j + 1] - out.t[j];
  if (!out.t.empty()) out.delta.back() = out.step;
  return out;
}

}  // namespace pnrf
