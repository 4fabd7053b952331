#include "pnrf/cameras_txt.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pnrf {

std::vector<View> read_cameras_txt(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<View> views;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int view_id = 0, width = 0, height = 0;
    double fx, fy, cx, cy;
    double m[12];
    ls >> view_id >> fx >> fy >> cx >> cy >> width >> height;
    for (double& v : m) ls >> v;
    if (!ls) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 19 fields (view_id intrinsics size pose)");
    }
    std::string trailing;
    if (ls >> trailing) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": trailing data");
    }
    // layout per row: r r r t
    const std::array<double, 9> rot{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]};
    const Vec3 t{m[3], m[7], m[11]};
    try {
      views.push_back({view_id, CameraModel(fx, fy, cx, cy, width, height, rot, t)});
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return views;
}

void write_cameras_txt(const std::filesystem::path& path, const std::vector<View>& views) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out << buf;
  };
  for (const View& view : views) {
    const CameraModel& c = view.camera;
    out << view.view_id;
    emit(c.fx());
    emit(c.fy());
    emit(c.cx());
    emit(c.cy());
    out << " " << c.width() << " " << c.height();
    const auto& r = c.rotation();
    const Vec3& t = c.translation();
    const double tv[3] = {t.x, t.y, t.z};
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) emit(r[row * 3 + col]);
      emit(tv[row]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace pnrf
