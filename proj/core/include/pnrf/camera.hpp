#pragma once

#include <array>

#include "pnrf/ray.hpp"
#include "pnrf/vec3.hpp"

namespace pnrf {

// A point expressed in the perspective coordinate system of a camera:
// continuous pixel coordinates (u, v) plus disparity w = 1 / depth.
// Equal steps in (u, v, w) sweep comparable world-space extents across the
// frustum, which is what the spatial index relies on.
struct PerspectiveCoord {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

// Pinhole camera with a world-to-camera rigid transform (row-major rotation,
// then translation): x_cam = R * x_world + t.
class CameraModel {
 public:
  CameraModel();
  CameraModel(double fx, double fy, double cx, double cy, int width, int height,
              const std::array<double, 9>& rotation, const Vec3& translation);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::array<double, 9>& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 to_camera(const Vec3& world) const;
  Vec3 to_world(const Vec3& camera) const;
  // Rotation only, for directions.
  Vec3 direction_to_world(const Vec3& camera_dir) const;
  Vec3 center() const;

 private:
  double fx_ = 1.0, fy_ = 1.0, cx_ = 0.0, cy_ = 0.0;
  int width_ = 1, height_ = 1;
  std::array<double, 9> rotation_{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation_;
};

// Ray through the center of pixel (px, py), unit direction, origin at the
// camera center. Throws std::invalid_argument for out-of-image pixels.
Ray generate_ray(const CameraModel& camera, int px, int py);

// Throws std::domain_error when the point is at or behind the camera plane.
PerspectiveCoord world_to_perspective(const CameraModel& camera, const Vec3& p);

// Returns false instead of throwing; used on hot paths where rays may sweep
// behind the camera.
bool try_world_to_perspective(const CameraModel& camera, const Vec3& p, PerspectiveCoord* out);

Vec3 perspective_to_world(const CameraModel& camera, const PerspectiveCoord& pc);

}  // namespace pnrf
