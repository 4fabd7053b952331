#include "pnrf/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace pnrf {
namespace {

void check_orthonormal(const std::array<double, 9>& r) {
  // max |R^T R - I|, the infinity norm over entries
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
      const double target = (i == j) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot - target));
    }
  }
  if (!(worst < 1e-9)) {
    throw std::invalid_argument("camera: rotation is not orthonormal");
  }
}

}  // namespace

CameraModel::CameraModel() = default;

CameraModel::CameraModel(double fx, double fy, double cx, double cy, int width, int height,
                         const std::array<double, 9>& rotation, const Vec3& translation)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height), rotation_(rotation),
      translation_(translation) {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw std::invalid_argument("camera: non-finite principal point");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
  for (double v : rotation) {
    if (!std::isfinite(v)) throw std::invalid_argument("camera: non-finite rotation");
  }
  if (!translation.is_finite()) throw std::invalid_argument("camera: non-finite translation");
  check_orthonormal(rotation);
}

Vec3 CameraModel::to_camera(const Vec3& p) const {
  const auto& r = rotation_;
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation_.x,
          r[3] * p.x + r[4] * p.y + r[5] * p.z + translation_.y,
          r[6] * p.x + r[7] * p.y + r[8] * p.z + translation_.z};
}

Vec3 CameraModel::to_world(const Vec3& c) const {
  const Vec3 d = c - translation_;
  return direction_to_world(d);
}

Vec3 CameraModel::direction_to_world(const Vec3& d) const {
  const auto& r = rotation_;
  // R^T * d
  return {r[0] * d.x + r[3] * d.y + r[6] * d.z,
          r[1] * d.x + r[4] * d.y + r[7] * d.z,
          r[2] * d.x + r[5] * d.y + r[8] * d.z};
}

Vec3 CameraModel::center() const { return direction_to_world(-translation_); }

Ray generate_ray(const CameraModel& camera, int px, int py) {
  if (px < 0 || px >= camera.width() || py < 0 || py >= camera.height()) {
    throw std::invalid_argument("generate_ray: pixel outside image");
  }
  const Vec3 dir_cam{(px + 0.5 - camera.cx()) / camera.fx(),
                     (py + 0.5 - camera.cy()) / camera.fy(), 1.0};
  Ray ray;
  ray.origin = camera.center();
  ray.direction = camera.direction_to_world(dir_cam).normalized();
  return ray;
}

PerspectiveCoord world_to_perspective(const CameraModel& camera, const Vec3& p) {
  PerspectiveCoord pc;
  if (!try_world_to_perspective(camera, p, &pc)) {
    throw std::domain_error("world_to_perspective: point at or behind the camera plane");
  }
  return pc;
}

bool try_world_to_perspective(const CameraModel& camera, const Vec3& p, PerspectiveCoord* out) {
  const Vec3 c = camera.to_camera(p);
  if (!(c.z > 0.0)) return false;
  out->u = camera.fx() * c.x / c.z + camera.cx();
  out->v = camera.fy() * c.y / c.z + camera.cy();
  out->w = 1.0 / c.z;
  return true;
}

Vec3 perspective_to_world(const CameraModel& camera, const PerspectiveCoord& pc) {
  if (!(pc.w > 0.0)) throw std::domain_error("perspective_to_world: disparity must be positive");
  const double z = 1.0 / pc.w;
  const Vec3 cam{(pc.u - camera.cx()) * z / camera.fx(), (pc.v - camera.cy()) * z / camera.fy(), z};
  return camera.to_world(cam);
}

}  // namespace pnrf
