#pragma once

#include <filesystem>
#include <vector>

#include "pnrf/image.hpp"

namespace pnrf {

// Grayscale PFM ("Pf" header, little-endian float32, rows bottom to top).
// Values round-trip at float precision; depth maps use 0 for "no surface".
void write_pfm(const std::filesystem::path& path, const GrayBuffer& image);
GrayBuffer read_pfm(const std::filesystem::path& path);

// Per-view depth likelihood volume: one value per (pixel, depth plane).
struct ProbabilityVolume {
  int width = 0;
  int height = 0;
  std::vector<double> plane_depths;  // ascending camera-space depths
  std::vector<double> values;        // [y][x][plane], each in [0, 1]

  int plane_count() const { return int(plane_depths.size()); }

  double at(int x, int y, int plane) const {
    return values[(std::size_t(y) * width + x) * plane_depths.size() + plane];
  }
  double& at(int x, int y, int plane) {
    return values[(std::size_t(y) * width + x) * plane_depths.size() + plane];
  }
};

// Container format: text header "height width planes\n", one line of ascending
// plane depths, then float32 little-endian values in [y][x][plane] order.
void write_probvol(const std::filesystem::path& path, const ProbabilityVolume& volume);
ProbabilityVolume read_probvol(const std::filesystem::path& path);

}  // namespace pnrf
