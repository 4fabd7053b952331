#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pnrf/vec3.hpp"

namespace pnrf {

// Row-major RGB image, channels interleaved, values expected in [0, 1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 * width * height

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0);

  Vec3 get(int x, int y) const {
    const std::size_t i = 3 * (std::size_t(y) * width + x);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, const Vec3& c) {
    const std::size_t i = 3 * (std::size_t(y) * width + x);
    data[i] = c.x;
    data[i + 1] = c.y;
    data[i + 2] = c.z;
  }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
};

// Row-major single-channel buffer in [0, 1]; used for opacity and depth
// previews next to the color output.
struct GrayBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayBuffer() = default;
  GrayBuffer(int w, int h, double fill = 0.0);
};

// Peak signal-to-noise ratio against a peak of 1.0. Identical images give
// +infinity. Throws std::invalid_argument on shape mismatch or empty input.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b);

// Binary PPM (P6, maxval 255). Channels are quantized as round(c * 255) after
// clamping to [0, 1]; decoding maps byte v back to v / 255.
void write_ppm(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255), same quantization rule.
void write_pgm(const std::filesystem::path& path, const GrayBuffer& image);
GrayBuffer read_pgm(const std::filesystem::path& path);

}  // namespace pnrf
