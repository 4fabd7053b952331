#pragma once

#include <stdexcept>

#include "pnrf/vec3.hpp"

namespace pnrf {

// A ray with a parametric sampling range. Directions are unit length by
// convention; march code assumes t measures world distance.
struct Ray {
  Vec3 origin;
  Vec3 direction{0.0, 0.0, 1.0};
  double t_near = 0.0;
  double t_far = 1e30;

  Vec3 at(double t) const { return origin + direction * t; }

  void validate() const {
    if (!origin.is_finite() || !direction.is_finite()) {
      throw std::invalid_argument("ray: non-finite origin or direction");
    }
    const double n = direction.norm();
    if (std::abs(n - 1.0) > 1e-9) {
      throw std::invalid_argument("ray: direction must be unit length");
    }
    if (!(t_near >= 0.0) || !(t_near < t_far)) {
      throw std::invalid_argument("ray: requires 0 <= t_near < t_far");
    }
  }
};

}  // namespace pnrf
