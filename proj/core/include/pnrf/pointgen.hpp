#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pnrf/camera.hpp"
#include "pnrf/image.hpp"
#include "pnrf/pfm.hpp"
#include "pnrf/point_cloud.hpp"
#include "pnrf/vec3.hpp"

namespace pnrf {

// One calibrated view with measured depth and a per-pixel depth likelihood
// volume; the raw material for seeding a point cloud.
struct DepthViewInput {
  CameraModel camera;
  GrayBuffer depth;          // world-unit depth per pixel, 0 = invalid
  ProbabilityVolume volume;  // may stay empty when only unprojection is needed

  void validate() const;
};

// One world-space point per valid depth pixel on the stride lattice: the
// pixel center ray scaled so camera-space z equals the measured depth.
std::vector<Vec3> unproject_depth(const DepthViewInput& view, int stride);

struct ConfidenceResult {
  std::vector<double> gammas;       // one per input point, each in [0, 1]
  std::size_t outside_frustum = 0;  // points that fell back to the floor value
};

// Trilinear sample of the depth likelihood volume at each point: bilinear
// over pixel centers with clamp to edge, linear between the two bracketing
// depth planes (clamped past the end planes). Points behind the camera or
// outside the image get the floor confidence 1e-4 and are counted.
ConfidenceResult confidence_from_volume(const DepthViewInput& view,
                                        const std::vector<Vec3>& points);

// Vertex data read from or written to a PLY file. Optional channels are
// empty when absent; features are row-major size() * feature_dim.
struct PlyCloud {
  std::vector<Vec3> positions;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<double> confidences;
  std::vector<double> features;
  int feature_dim = 0;

  std::size_t size() const { return positions.size(); }
  void validate() const;
};

// PLY vertex files, ASCII or binary little-endian. Recognized vertex
// properties: x/y/z, red/green/blue (uchar), confidence, feature_0 upward;
// unknown scalar properties are skipped. Scalars are stored as float32, so
// round trips are exact at that precision.
PlyCloud load_ply(const std::filesystem::path& path);
void save_ply(const std::filesystem::path& path, const PlyCloud& cloud, bool binary = true);

struct FeatureInitStrategy {
  enum class Kind { kKaimingRandom, kFromPointColors, kZeros };
  Kind kind = Kind::kKaimingRandom;
  std::uint64_t seed = 0;
};

// Assembles a trainable cloud. Confidences default to 0.3 when `gammas` is
// empty and are clamped to [1e-4, 1 - 1e-4] before the logit conversion.
// kKaimingRandom draws Normal(0, sqrt(2 / feature_dim)); kFromPointColors
// copies RGB scaled to [0, 1] into the first three channels and draws the
// rest the same way; kZeros leaves every feature at zero.
NeuralPointCloud init_cloud(const std::vector<Vec3>& positions,
                            const std::vector<double>& gammas,
                            const std::vector<std::array<std::uint8_t, 3>>& colors,
                            const FeatureInitStrategy& strategy, int feature_dim);

// Concatenation in argument order; duplicates are kept.
NeuralPointCloud merge_clouds(const std::vector<NeuralPointCloud>& clouds);

}  // namespace pnrf
