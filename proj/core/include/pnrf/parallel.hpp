#pragma once

#include <cstddef>
#include <functional>

namespace pnrf {

// Applies fn to fixed-size chunks of [0, n). Chunk boundaries depend only on
// n and chunk_size, never on the worker count, so per-chunk outputs land in
// identical slots for any `threads`; combining those slots in chunk order
// keeps reductions bit-reproducible. fn receives (chunk, begin, end). The
// first exception thrown by fn stops the pool and is rethrown here.
void parallel_chunks(std::size_t n, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace pnrf
