#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pnrf/aligned.hpp"

namespace pnrf {

// Dense row-major tensor of doubles. Rank is usually 1 or 2; the renderer and
// optimizer treat rank-2 tensors as [batch, channels]. Values live in 64-byte
// aligned storage (see aligned.hpp).
struct Tensor {
  std::vector<std::size_t> shape;
  AlignedVector values;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor from_vector(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  // rank-2 helpers
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  double* row(std::size_t r) { return values.data() + r * cols(); }
  const double* row(std::size_t r) const { return values.data() + r * cols(); }

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_string() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace pnrf
