#include "pnrf/pfm.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pnrf {
namespace {

void write_f32(std::ostream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(float)));
}

std::vector<float> read_f32(std::istream& in, std::size_t count, const std::string& what) {
  std::vector<float> v(count);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(float)));
  if (!in) throw std::runtime_error(what + ": truncated data");
  return v;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const GrayBuffer& image) {
  if (image.width <= 0 || image.height <= 0) {
    throw std::invalid_argument("write_pfm: empty image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pfm: cannot open " + path.string());
  out << "Pf\n" << image.width << " " << image.height << "\n-1.0\n";
  std::vector<float> row(std::size_t(image.width));
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) {
      row[std::size_t(x)] = float(image.data[std::size_t(y) * image.width + x]);
    }
    write_f32(out, row);
  }
  if (!out) throw std::runtime_error("write_pfm: write failed for " + path.string());
}

GrayBuffer read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pfm: cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf") throw std::runtime_error("read_pfm: not a grayscale PFM: " + path.string());
  if (width <= 0 || height <= 0) throw std::runtime_error("read_pfm: bad size in " + path.string());
  if (scale >= 0.0) throw std::runtime_error("read_pfm: big-endian data unsupported");
  in.get();  // single whitespace after the scale line

  GrayBuffer image(width, height);
  for (int y = height - 1; y >= 0; --y) {
    const std::vector<float> row = read_f32(in, std::size_t(width), "read_pfm");
    for (int x = 0; x < width; ++x) {
      image.data[std::size_t(y) * width + x] = double(row[std::size_t(x)]);
    }
  }
  return image;
}

void write_probvol(const std::filesystem::path& path, const ProbabilityVolume& volume) {
  const std::size_t planes = volume.plane_depths.size();
  if (volume.width <= 0 || volume.height <= 0 || planes == 0) {
    throw std::invalid_argument("write_probvol: empty volume");
  }
  if (volume.values.size() != std::size_t(volume.width) * volume.height * planes) {
    throw std::invalid_argument("write_probvol: value count mismatch");
  }
  for (std::size_t i = 1; i < planes; ++i) {
    if (!(volume.plane_depths[i] > volume.plane_depths[i - 1])) {
      throw std::invalid_argument("write_probvol: plane depths not ascending");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_probvol: cannot open " + path.string());
  out << volume.height << " " << volume.width << " " << planes << "\n";
  char buf[32];
  for (std::size_t i = 0; i < planes; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", volume.plane_depths[i]);
    out << (i ? " " : "") << buf;
  }
  out << "\n";
  std::vector<float> data(volume.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = float(volume.values[i]);
  write_f32(out, data);
  if (!out) throw std::runtime_error("write_probvol: write failed for " + path.string());
}

ProbabilityVolume read_probvol(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_probvol: cannot open " + path.string());
  ProbabilityVolume volume;
  std::size_t planes = 0;
  in >> volume.height >> volume.width >> planes;
  if (!in || volume.width <= 0 || volume.height <= 0 || planes == 0) {
    throw std::runtime_error("read_probvol: bad header in " + path.string());
  }
  volume.plane_depths.resize(planes);
  for (double& d : volume.plane_depths) in >> d;
  if (!in) throw std::runtime_error("read_probvol: bad plane depths in " + path.string());
  for (std::size_t i = 1; i < planes; ++i) {
    if (!(volume.plane_depths[i] > volume.plane_depths[i - 1])) {
      throw std::runtime_error("read_probvol: plane depths not ascending");
    }
  }
  in.get();  // newline before the raw block
  const std::size_t count = std::size_t(volume.width) * volume.height * planes;
  const std::vector<float> data = read_f32(in, count, "read_probvol");
  volume.values.assign(data.begin(), data.end());
  return volume;
}

}  // namespace pnrf
