#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "pnrf/camera.hpp"
#include "pnrf/point_cloud.hpp"
#include "pnrf/ray.hpp"

namespace pnrf {

// Neighbor search configuration. Non-positive radius or cell sizes mean
// "derive from the cloud at build time": cells are sized so an occupied cell
// holds about four points, and the default radius is the world-space diagonal
// of one cell at the cloud's median depth.
struct QueryConfig {
  int k = 8;
  double radius = 0.0;
  double cell_u = 0.0;
  double cell_v = 0.0;
  double cell_w = 0.0;
  int extent = 1;  // cells searched around the query cell, per axis

  void validate() const;
};

// Query result: point indices sorted by (world distance, index) ascending.
struct NeighborSet {
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
};

// Uniform grid over the perspective coordinates (u, v, 1/z) of one camera.
// Cells that are even in these coordinates sweep frustum-aligned world
// volumes, so occupancy lookups dovetail with per-ray marching.
class PerspectiveGrid {
 public:
  struct CellCoord {
    std::int64_t i = 0, j = 0, k = 0;
    bool operator==(const CellCoord&) const = default;
  };

  const CameraModel& camera() const { return camera_; }
  double cell_u() const { return cell_u_; }
  double cell_v() const { return cell_v_; }
  double cell_w() const { return cell_w_; }
  double origin_u() const { return origin_u_; }
  double origin_v() const { return origin_v_; }
  double origin_w() const { return origin_w_; }

  // Resolved default query radius (see QueryConfig).
  double default_radius() const { return default_radius_; }

  // Depth slab (camera-space z) containing all registered points, padded by
  // the neighborhood extent; rays are marched only through this slab.
  double z_lo() const { return z_lo_; }
  double z_hi() const { return z_hi_; }

  CellCoord cell_of(const PerspectiveCoord& pc) const;
  const std::vector<std::uint32_t>* cell_points(const CellCoord& c) const;
  bool neighborhood_occupied(const CellCoord& c, int extent) const;

  std::size_t point_count() const { return registered_; }
  std::size_t skipped_point_count() const { return skipped_; }
  std::size_t occupied_cell_count() const { return cells_.size(); }
  std::uint64_t cloud_generation() const { return cloud_generation_; }

  // points-per-cell counts over occupied cells, for diagnostics
  std::vector<std::size_t> occupancy_histogram() const;

 private:
  friend PerspectiveGrid build_index(const NeuralPointCloud&, const CameraModel&,
                                     const QueryConfig&);

  std::uint64_t key_of(const CellCoord& c) const;

  CameraModel camera_;
  double cell_u_ = 1.0, cell_v_ = 1.0, cell_w_ = 1.0;
  double origin_u_ = 0.0, origin_v_ = 0.0, origin_w_ = 0.0;
  CellCoord min_cell_;
  CellCoord max_cell_;
  double default_radius_ = 0.0;
  double z_lo_ = 0.0, z_hi_ = 0.0;
  std::size_t registered_ = 0;
  std::size_t skipped_ = 0;
  std::uint64_t cloud_generation_ = 0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

// Registers every cloud point that lies in front of the camera; points at or
// behind the camera plane are counted in skipped_point_count().
PerspectiveGrid build_index(const NeuralPointCloud& cloud, const CameraModel& camera,
                            const QueryConfig& cfg);

// K nearest registered points within world radius R of x, restricted to the
// (2*extent+1)^3 cells around x's cell. Returns an empty set when x is behind
// the camera or its neighborhood holds no points.
NeighborSet query_neighbors(const PerspectiveGrid& grid, const NeuralPointCloud& cloud,
                            const Vec3& x, const QueryConfig& cfg);

struct ShadingConfig {
  double step = 0.0;    // <= 0: half the resolved default radius
  int max_samples = 64;
  int extent = 1;

  void validate() const;
};

// Ordered sample parameters along the ray with their compositing intervals.
// delta[j] is the distance to the next retained sample; the last sample gets
// the raw step.
struct ShadingPoints {
  std::vector<double> t;
  std::vector<double> delta;
  double step = 0.0;  // resolved step actually used

  std::size_t size() const { return t.size(); }
};

// Midpoint samples with uniform parametric spacing over the ray's intersection
// with the grid slab, keeping only samples whose cell neighborhood is
// occupied. Stops once max_samples samples are retained.
ShadingPoints place_shading_points(const Ray& ray, const PerspectiveGrid& grid,
                                   const ShadingConfig& cfg);

}  // namespace pnrf
