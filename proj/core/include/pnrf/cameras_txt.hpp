#pragma once

#include <filesystem>
#include <vector>

#include "pnrf/camera.hpp"

namespace pnrf {

struct View {
  int view_id = 0;
  CameraModel camera;
};

// Plain-text camera list, one view per line:
//   view_id fx fy cx cy width height r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz
// with the world-to-camera rotation row-major and interleaved with the
// translation column. Blank lines and lines starting with '#' are skipped.
std::vector<View> read_cameras_txt(const std::filesystem::path& path);
void write_cameras_txt(const std::filesystem::path& path, const std::vector<View>& views);

}  // namespace pnrf
