#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnrf/camera.hpp"
#include "pnrf/image.hpp"
#include "pnrf/pfm.hpp"
#include "pnrf/ray.hpp"
#include "pnrf/vec3.hpp"

namespace pnrf {

// Analytic ground-truth scenes: piecewise-constant density over simple
// solids, with per-solid colors. Everything here is closed-form so rendered
// values can act as referees for the neural pipeline without sharing any of
// its code.

enum class SceneKind { kSphere, kTwoSpheres, kBoxWithHole };

struct SceneParams {
  double radius = 1.0;
  double density = 8.0;
  double second_density = 0.0;   // two_spheres: density of the second (0 = same)
  double separation = 2.6;       // two_spheres: center distance
  double hole_half_width = 0.4;  // box_with_hole: half width of the square tunnel

  void validate(SceneKind kind) const;
};

struct Solid {
  enum class Shape { kSphere, kBox };
  Shape shape = Shape::kSphere;
  Vec3 center{0, 0, 0};
  double radius = 1.0;          // sphere
  Vec3 box_min{0, 0, 0};        // box
  Vec3 box_max{0, 0, 0};
  double density = 1.0;
  Vec3 color_base{0.5, 0.5, 0.5};
  Vec3 color_slope{0, 0, 0};  // color = clamp(base + slope * (x - center), 0, 1)

  bool contains(const Vec3& x) const;
  Vec3 color_at(const Vec3& x) const;
};

struct AnalyticScene {
  SceneKind kind = SceneKind::kSphere;
  SceneParams params;
  std::uint64_t seed = 0;
  std::vector<Solid> solids;
  std::vector<Solid> cavities;  // carved out: density is zero inside any of these
  Vec3 bbox_min{0, 0, 0};
  Vec3 bbox_max{0, 0, 0};

  // Density combines solids by max; the color comes from the solid attaining
  // that max (first wins on ties). Points in a cavity or outside every solid
  // have zero density.
  double density_at(const Vec3& x) const;
  Vec3 color_at(const Vec3& x) const;
};

AnalyticScene make_scene(SceneKind kind, const SceneParams& params, std::uint64_t seed);

// First ray parameter at which the density becomes positive; the boundary
// structure is solved analytically (sphere quadratics, box slabs). Returns
// false when the ray never enters a positive-density region.
bool first_hit(const AnalyticScene& scene, const Ray& ray, double* t_hit);

// Dense uniform ray marching of the analytic fields with midpoint sampling:
// the referee implementation of emission-absorption compositing. Shares no
// code with the neural renderer.
ImageBuffer oracle_render(const AnalyticScene& scene, const CameraModel& camera, int samples,
                          const Vec3& background = {0, 0, 0});

// Drop every sampled point whose direction from the scene center lies within
// `angle` radians of `axis` (models an unreconstructed region).
struct CapRemoval {
  Vec3 axis{0, 0, 1};
  double angle = 0.5;
};

// Area-uniform samples of the scene's surface. With a cap removal the points
// inside the cap are dropped, so fewer than n may return.
std::vector<Vec3> sample_surface_points(const AnalyticScene& scene, std::size_t n,
                                        std::uint64_t seed, const CapRemoval* cap = nullptr);

// Fraction of 10,000 fixed surface samples whose nearest position in
// `positions` lies within `tolerance`.
double coverage(const std::vector<Vec3>& positions, const AnalyticScene& scene, double tolerance);

struct DatasetView {
  int view_id = 0;
  bool is_test = false;
  CameraModel camera;
  ImageBuffer image;
  bool has_depth = false;
  GrayBuffer depth;           // camera-space z of the first surface, 0 = none
  ProbabilityVolume probvol;  // empty when depth planes are disabled
};

struct SceneDataset {
  AnalyticScene scene;
  Vec3 background{0, 0, 0};
  std::vector<DatasetView> views;

  std::vector<const DatasetView*> train_views() const;
  std::vector<const DatasetView*> test_views() const;
};

struct DatasetOptions {
  int oracle_samples = 512;
  Vec3 background{0, 0, 0};
  bool with_depth = true;
  int depth_planes = 16;       // probability volume resolution, 0 = skip volumes
  double camera_distance = 0;  // 0 = three times the scene's bounding radius
};

// Cameras on a deterministic spiral around the scene looking at its center;
// images from oracle_render; optional per-view depth and depth-likelihood
// volumes derived from analytic first hits.
SceneDataset make_dataset(const AnalyticScene& scene, int n_train, int n_test, int width,
                          int height, std::uint64_t seed, const DatasetOptions& opt = {});

// Directory layout: cameras.txt, scene.txt, train/####.ppm, test/####.ppm,
// and when depth is enabled depth/####.pfm plus probvol/####.bin.
void save_dataset(const SceneDataset& dataset, const std::filesystem::path& dir);
SceneDataset load_dataset(const std::filesystem::path& dir);

}  // namespace pnrf
