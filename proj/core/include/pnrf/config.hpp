#pragma once

#include <filesystem>
#include <string>

#include "pnrf/field.hpp"
#include "pnrf/harness.hpp"
#include "pnrf/optimizer.hpp"

namespace pnrf {

// One run's worth of settings, readable from and writable to a small INI
// dialect: [section] headers, key = value lines, # comments. Unknown sections
// or keys are errors that carry the offending line number.
struct RunConfig {
  FieldConfig field;
  TrainConfig train;
  SceneKind scene_kind = SceneKind::kSphere;
  SceneParams scene;
  std::uint64_t scene_seed = 0;

  void validate() const;
};

// Parses `text` on top of `base`, so keys the text omits keep their base
// values.
RunConfig parse_config_text(const std::string& text, const RunConfig& base = {});

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

// Emits every section and key. Doubles are printed with %.17g, so a
// write/parse round trip reproduces the config exactly.
std::string write_config_text(const RunConfig& cfg);

std::string scene_kind_name(SceneKind kind);
SceneKind parse_scene_kind(const std::string& name);

}  // namespace pnrf
