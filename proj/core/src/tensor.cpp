#include "pnrf/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace pnrf {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.values.assign(shape_product(shape), 0.0);
  t.shape = std::move(shape);
  return t;
}

Tensor Tensor::from_vector(std::vector<double> v) {
  Tensor t;
  t.shape = {v.size()};
  t.values.assign(v.begin(), v.end());
  return t;
}

void Tensor::fill(double v) { std::fill(values.begin(), values.end(), v); }

std::string Tensor::shape_string() const {
  std::ostringstream ss;
  ss << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
  ss << "]";
  return ss.str();
}

}  // namespace pnrf
