#include "pnrf/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace pnrf {
namespace {

std::uint8_t quantize(double c) {
  const double clamped = std::clamp(c, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

// Reads one whitespace-delimited token, skipping `#` comment lines as allowed
// by the netpbm header grammar.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
  if (tok.empty()) throw std::runtime_error("netpbm: truncated header");
  return tok;
}

struct PnmHeader {
  int width = 0;
  int height = 0;
};

PnmHeader read_header(std::istream& in, const char* magic, const std::filesystem::path& path) {
  const std::string m = next_token(in);
  if (m != magic) {
    throw std::runtime_error(path.string() + ": expected " + magic + " header, got '" + m + "'");
  }
  PnmHeader h;
  h.width = std::stoi(next_token(in));
  h.height = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (h.width <= 0 || h.height <= 0) throw std::runtime_error(path.string() + ": bad image size");
  if (maxval != 255) throw std::runtime_error(path.string() + ": only maxval 255 is supported");
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return in;
}

}  // namespace

ImageBuffer::ImageBuffer(int w, int h, double fill)
    : width(w), height(h), data(3 * std::size_t(w) * h, fill) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("image: size must be positive");
}

GrayBuffer::GrayBuffer(int w, int h, double fill) : width(w), height(h), data(std::size_t(w) * h, fill) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("image: size must be positive");
}

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("psnr: image shapes differ");
  }
  if (a.data.empty()) throw std::invalid_argument("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / double(a.data.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& image) {
  if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("write_ppm: empty image");
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(3 * std::size_t(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Vec3 c = image.get(x, y);
      row[3 * x + 0] = quantize(c.x);
      row[3 * x + 1] = quantize(c.y);
      row[3 * x + 2] = quantize(c.z);
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) throw std::runtime_error("write_ppm: write failed: " + path.string());
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, "P6", path);
  ImageBuffer image(h.width, h.height);
  std::vector<std::uint8_t> row(3 * std::size_t(h.width));
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
    if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
    for (int x = 0; x < h.width; ++x) {
      image.set(x, y, {row[3 * x + 0] / 255.0, row[3 * x + 1] / 255.0, row[3 * x + 2] / 255.0});
    }
  }
  return image;
}

void write_pgm(const std::filesystem::path& path, const GrayBuffer& image) {
  if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("write_pgm: empty image");
  auto out = open_out(path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(std::size_t(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      row[x] = quantize(image.data[std::size_t(y) * image.width + x]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) throw std::runtime_error("write_pgm: write failed: " + path.string());
}

GrayBuffer read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, "P5", path);
  GrayBuffer image(h.width, h.height);
  std::vector<std::uint8_t> row(std::size_t(h.width));
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
    if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
    for (int x = 0; x < h.width; ++x) image.data[std::size_t(y) * h.width + x] = row[x] / 255.0;
  }
  return image;
}

}  // namespace pnrf
