#include "pnrf/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pnrf {
namespace {

constexpr char kMagic[4] = {'P', 'N', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxValues = std::uint64_t(1) << 33;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  for (const NamedTensor& t : tensors) {
    if (t.name.empty() || t.name.size() > kMaxNameLength) {
      throw std::invalid_argument("save_tensors: tensor name must have 1.." +
                                  std::to_string(kMaxNameLength) + " bytes");
    }
    if (t.tensor.rank() == 0 || t.tensor.rank() > kMaxRank) {
      throw std::invalid_argument("save_tensors: tensor '" + t.name + "' has unsupported rank " +
                                  std::to_string(t.tensor.rank()));
    }
    if (t.tensor.size() != shape_product(t.tensor.shape)) {
      throw std::invalid_argument("save_tensors: tensor '" + t.name +
                                  "' has values inconsistent with its shape");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_tensors: cannot open " + path.string());
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  for (const NamedTensor& t : tensors) {
    write_pod(out, std::uint32_t(t.name.size()));
    out.write(t.name.data(), std::streamsize(t.name.size()));
    write_pod(out, std::uint32_t(t.tensor.rank()));
    for (std::size_t d : t.tensor.shape) write_pod(out, std::uint64_t(d));
    out.write(reinterpret_cast<const char*>(t.tensor.values.data()),
              std::streamsize(t.tensor.values.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_tensors: write failed for " + path.string());
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_tensors: cannot open " + path.string());
  auto fail = [&](const std::string& what) {
    return std::runtime_error("load_tensors: " + what + " in " + path.string());
  };
  auto read_bytes = [&](void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), std::streamsize(n));
    if (std::size_t(in.gcount()) != n) throw fail(std::string("truncated ") + what);
  };

  char magic[4] = {};
  read_bytes(magic, 4, "header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw fail("bad magic, expected PNRF");
  std::uint32_t version = 0;
  read_bytes(&version, sizeof version, "header");
  if (version != kVersion) throw fail("unsupported version " + std::to_string(version));

  std::vector<NamedTensor> out;
  for (;;) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
    if (in.gcount() == 0) break;
    if (std::size_t(in.gcount()) != sizeof name_len) throw fail("truncated tensor record");
    if (name_len == 0 || name_len > kMaxNameLength) {
      throw fail("implausible name length " + std::to_string(name_len));
    }
    NamedTensor t;
    t.name.resize(name_len);
    read_bytes(t.name.data(), name_len, "tensor name");
    std::uint32_t rank = 0;
    read_bytes(&rank, sizeof rank, "tensor rank");
    if (rank == 0 || rank > kMaxRank) throw fail("implausible rank " + std::to_string(rank));
    t.tensor.shape.resize(rank);
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint64_t d = 0;
      read_bytes(&d, sizeof d, "tensor extents");
      if (d == 0 || d > kMaxValues || total > kMaxValues / d) {
        throw fail("implausible extents for tensor '" + t.name + "'");
      }
      t.tensor.shape[i] = std::size_t(d);
      total *= d;
    }
    t.tensor.values.resize(std::size_t(total));
    read_bytes(t.tensor.values.data(), std::size_t(total) * sizeof(double), "tensor values");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace pnrf
