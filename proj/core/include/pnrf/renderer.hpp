#pragma once

#include <vector>

#include "pnrf/field.hpp"
#include "pnrf/grid.hpp"
#include "pnrf/image.hpp"

namespace pnrf {

struct RenderOptions {
  Vec3 background{0, 0, 0};
  QueryConfig query;
  ShadingConfig shading;
  bool opacity_map = false;
  bool depth_map = false;
  int threads = 1;
};

// Emission-absorption compositing over precomputed per-sample densities and
// radiances. Exposed separately from the ray march so its closed forms can be
// pinned directly by tests.
struct CompositeResult {
  Vec3 color;
  double tau_end = 1.0;            // transmittance left after the last sample
  std::vector<double> alpha;       // clamped to [0, 1 - 1e-10]
  std::vector<double> tau;         // transmittance arriving at each sample
};

CompositeResult composite_ray(const std::vector<double>& sigma, const std::vector<Vec3>& radiance,
                              const std::vector<double>& delta, const Vec3& background);

// Reverse-mode gradients of composite_ray's color with respect to sigma and
// radiance. Samples whose alpha saturated the clamp get zero density gradient.
void composite_backward(const std::vector<double>& sigma, const std::vector<Vec3>& radiance,
                        const std::vector<double>& delta, const Vec3& background,
                        const CompositeResult& forward, const Vec3& dcolor,
                        std::vector<double>* dsigma, std::vector<Vec3>* dradiance);

// Everything march_ray computed for one ray, kept for gradients (record=true)
// and for locating high-opacity samples when growing points.
struct RayMarchState {
  ShadingPoints points;
  std::vector<FieldSample> samples;
  FieldBatch batch;
  std::vector<double> alpha;
  std::vector<double> tau;
  Vec3 background;
  Vec3 color;
  double tau_end = 1.0;
  double expected_depth = 0.0;  // compositing-weighted ray distance, 0 if nothing hit
  bool recorded = false;
  bool consumed = false;

  double opacity() const { return 1.0 - tau_end; }
};

RayMarchState march_ray(const NeuralPointCloud& cloud, const PerspectiveGrid& grid,
                        const RadianceFieldParams& params, const Ray& ray,
                        const RenderOptions& opts, bool record = false);

// Accumulates dLoss/dColor back through the compositing and the field into
// `grads`. Consumes the state; a second call throws std::logic_error.
void backward_ray(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                  RayMarchState& state, const Vec3& dcolor, RadianceFieldGrads& grads);

struct RenderResult {
  ImageBuffer image;
  GrayBuffer opacity;  // filled when opts.opacity_map
  GrayBuffer depth;    // filled when opts.depth_map
};

// One march per pixel. Pixels are processed in fixed 16-pixel chunks whose
// outputs are independent slots, so the image is bit-identical for any
// opts.threads value.
RenderResult render_image(const NeuralPointCloud& cloud, const PerspectiveGrid& grid,
                          const RadianceFieldParams& params, const CameraModel& camera,
                          const RenderOptions& opts);

}  // namespace pnrf
