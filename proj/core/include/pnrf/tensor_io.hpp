#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pnrf/tensor.hpp"

namespace pnrf {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Binary tensor container. Layout: the magic bytes "PNRF", a u32 format
// version, then for each tensor a u32 name length, the name bytes, a u32
// rank, one u64 per extent, and the values as little-endian f64 in row-major
// order. Tensors keep their order across a save/load round trip.
void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

}  // namespace pnrf
