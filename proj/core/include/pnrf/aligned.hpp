#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace pnrf {

// Allocator that returns 64-byte-aligned storage. Vectorized kernels split
// loops based on the address of the data they touch; pinning every numeric
// buffer to one alignment keeps floating-point results independent of heap
// layout, which the bit-reproducibility tests rely on.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(alignment));
  }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

}  // namespace pnrf
