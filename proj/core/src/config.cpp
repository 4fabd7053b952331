#include "pnrf/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pnrf {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  field.validate();
  train.validate();
  scene.validate(scene_kind);
}

std::string scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::kSphere: return "sphere";
    case SceneKind::kTwoSpheres: return "two_spheres";
    case SceneKind::kBoxWithHole: return "box_with_hole";
  }
  throw std::invalid_argument("scene_kind_name: unknown kind");
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "sphere") return SceneKind::kSphere;
  if (name == "two_spheres") return SceneKind::kTwoSpheres;
  if (name == "box_with_hole") return SceneKind::kBoxWithHole;
  throw std::invalid_argument("unknown scene kind '" + name +
                              "', expected sphere, two_spheres, or box_with_hole");
}

RunConfig parse_config_text(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;

  auto fail = [&](const std::string& what) {
    return std::invalid_argument("config line " + std::to_string(line_no) + ": " + what);
  };
  auto parse_double = [&](const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw fail("'" + v + "' is not a number");
    return out;
  };
  auto parse_int = [&](const std::string& v) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw fail("'" + v + "' is not an integer");
    return out;
  };
  auto parse_u64 = [&](const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      throw fail("'" + v + "' is not an unsigned integer");
    }
    return out;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "field" && section != "train" && section != "render" &&
          section != "index" && section != "scene") {
        throw fail("unknown section [" + section + "]");
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw fail("key '" + key + "' appears before any [section]");
    if (key.empty()) throw fail("empty key");
    if (value.empty()) throw fail("empty value for '" + key + "'");

    if (section == "field") {
      if (key == "feature_dim") cfg.field.feature_dim = parse_int(value);
      else if (key == "processed_dim") cfg.field.processed_dim = parse_int(value);
      else if (key == "f_hidden") cfg.field.f_hidden = parse_int(value);
      else if (key == "t_hidden") cfg.field.t_hidden = parse_int(value);
      else if (key == "r_hidden") cfg.field.r_hidden = parse_int(value);
      else if (key == "position_bands") cfg.field.position_bands = parse_int(value);
      else if (key == "direction_bands") cfg.field.direction_bands = parse_int(value);
      else if (key == "feature_bands") cfg.field.feature_bands = parse_int(value);
      else if (key == "min_distance") cfg.field.min_distance = parse_double(value);
      else throw fail("unknown key '" + key + "' in [field]");
    } else if (section == "train") {
      if (key == "lr") cfg.train.lr = parse_double(value);
      else if (key == "sparsity_weight") cfg.train.sparsity_weight = parse_double(value);
      else if (key == "batch_rays") cfg.train.batch_rays = parse_int(value);
      else if (key == "iterations") cfg.train.iterations = parse_int(value);
      else if (key == "prune_grow_interval") cfg.train.prune_grow_interval = parse_int(value);
      else if (key == "prune_threshold") cfg.train.prune_threshold = parse_double(value);
      else if (key == "t_opacity") cfg.train.t_opacity = parse_double(value);
      else if (key == "t_dist") cfg.train.t_dist = parse_double(value);
      else if (key == "seed") cfg.train.seed = parse_u64(value);
      else if (key == "snapshot_interval") cfg.train.snapshot_interval = parse_int(value);
      else if (key == "threads") cfg.train.threads = parse_int(value);
      else throw fail("unknown key '" + key + "' in [train]");
    } else if (section == "render") {
      if (key == "step") cfg.train.shading.step = parse_double(value);
      else if (key == "max_samples") cfg.train.shading.max_samples = parse_int(value);
      else if (key == "background_r") cfg.train.background.x = parse_double(value);
      else if (key == "background_g") cfg.train.background.y = parse_double(value);
      else if (key == "background_b") cfg.train.background.z = parse_double(value);
      else throw fail("unknown key '" + key + "' in [render]");
    } else if (section == "index") {
      if (key == "k") cfg.train.query.k = parse_int(value);
      else if (key == "radius") cfg.train.query.radius = parse_double(value);
      else if (key == "cell_u") cfg.train.query.cell_u = parse_double(value);
      else if (key == "cell_v") cfg.train.query.cell_v = parse_double(value);
      else if (key == "cell_w") cfg.train.query.cell_w = parse_double(value);
      else if (key == "extent") {
        cfg.train.query.extent = parse_int(value);
        cfg.train.shading.extent = cfg.train.query.extent;
      } else {
        throw fail("unknown key '" + key + "' in [index]");
      }
    } else {
      if (key == "kind") {
        try {
          cfg.scene_kind = parse_scene_kind(value);
        } catch (const std::invalid_argument& e) {
          throw fail(e.what());
        }
      } else if (key == "radius") {
        cfg.scene.radius = parse_double(value);
      } else if (key == "density") {
        cfg.scene.density = parse_double(value);
      } else if (key == "second_density") {
        cfg.scene.second_density = parse_double(value);
      } else if (key == "separation") {
        cfg.scene.separation = parse_double(value);
      } else if (key == "hole_half_width") {
        cfg.scene.hole_half_width = parse_double(value);
      } else if (key == "seed") {
        cfg.scene_seed = parse_u64(value);
      } else {
        throw fail("unknown key '" + key + "' in [scene]");
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), base);
}

std::string write_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << "\n"; };
  auto kd = [&](const char* key, double v) { kv(key, format_double(v)); };
  auto ki = [&](const char* key, long long v) { kv(key, std::to_string(v)); };

  out << "[field]\n";
  ki("feature_dim", cfg.field.feature_dim);
  ki("processed_dim", cfg.field.processed_dim);
  ki("f_hidden", cfg.field.f_hidden);
  ki("t_hidden", cfg.field.t_hidden);
  ki("r_hidden", cfg.field.r_hidden);
  ki("position_bands", cfg.field.position_bands);
  ki("direction_bands", cfg.field.direction_bands);
  ki("feature_bands", cfg.field.feature_bands);
  kd("min_distance", cfg.field.min_distance);
  out << "\n[train]\n";
  kd("lr", cfg.train.lr);
  kd("sparsity_weight", cfg.train.sparsity_weight);
  ki("batch_rays", cfg.train.batch_rays);
  ki("iterations", cfg.train.iterations);
  ki("prune_grow_interval", cfg.train.prune_grow_interval);
  kd("prune_threshold", cfg.train.prune_threshold);
  kd("t_opacity", cfg.train.t_opacity);
  kd("t_dist", cfg.train.t_dist);
  kv("seed", std::to_string(cfg.train.seed));
  ki("snapshot_interval", cfg.train.snapshot_interval);
  ki("threads", cfg.train.threads);
  out << "\n[render]\n";
  kd("step", cfg.train.shading.step);
  ki("max_samples", cfg.train.shading.max_samples);
  kd("background_r", cfg.train.background.x);
  kd("background_g", cfg.train.background.y);
  kd("background_b", cfg.train.background.z);
  out << "\n[index]\n";
  ki("k", cfg.train.query.k);
  kd("radius", cfg.train.query.radius);
  kd("cell_u", cfg.train.query.cell_u);
  kd("cell_v", cfg.train.query.cell_v);
  kd("cell_w", cfg.train.query.cell_w);
  ki("extent", cfg.train.query.extent);
  out << "\n[scene]\n";
  kv("kind", scene_kind_name(cfg.scene_kind));
  kd("radius", cfg.scene.radius);
  kd("density", cfg.scene.density);
  kd("second_density", cfg.scene.second_density);
  kd("separation", cfg.scene.separation);
  kd("hole_half_width", cfg.scene.hole_half_width);
  kv("seed", std::to_string(cfg.scene_seed));
  return out.str();
}

}  // namespace pnrf
