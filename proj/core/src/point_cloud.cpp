#include "pnrf/point_cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace pnrf {

void NeuralPointCloud::validate() const {
  if (feature_dim < 0) throw std::invalid_argument("cloud: negative feature dim");
  if (features.size() != size() * std::size_t(feature_dim)) {
    throw std::invalid_argument("cloud: feature buffer size mismatch");
  }
  if (gamma_logits.size() != size()) {
    throw std::invalid_argument("cloud: confidence buffer size mismatch");
  }
  for (const Vec3& p : positions) {
    if (!p.is_finite()) throw std::invalid_argument("cloud: non-finite position");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("cloud: non-finite feature");
  }
  for (double v : gamma_logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("cloud: non-finite confidence logit");
  }
}

}  // namespace pnrf
