#pragma once

#include <filesystem>

#include "pnrf/config.hpp"
#include "pnrf/optimizer.hpp"

namespace pnrf {

// A checkpoint is a directory holding points.ply (positions, confidences,
// features, all f32), mlp.bin (network weights, f64), train_state.bin (Adam
// moments and counters, f64), and meta.txt (the full run configuration).
// Network weights and Adam state round-trip bit-exactly; the point cloud
// round-trips through f32.
void save_checkpoint(const std::filesystem::path& dir, const TrainState& state,
                     const RunConfig& cfg);

struct Checkpoint {
  TrainState state;
  RunConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace pnrf
