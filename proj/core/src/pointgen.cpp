#include "pnrf/pointgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pnrf/math_util.hpp"

namespace pnrf {
namespace {

constexpr double kConfidenceFloor = 1e-4;

double sample_volume(const ProbabilityVolume& vol, double u, double v, double z) {
  const double a = u - 0.5;
  const double b = v - 0.5;
  const int x0 = int(std::floor(a));
  const int y0 = int(std::floor(b));
  const double fx = a - x0;
  const double fy = b - y0;

  const std::vector<double>& planes = vol.plane_depths;
  int p0 = 0;
  double fz = 0.0;
  if (z <= planes.front()) {
    p0 = 0;
  } else if (z >= planes.back()) {
    p0 = int(planes.size()) - 1;
  } else {
    p0 = int(std::upper_bound(planes.begin(), planes.end(), z) - planes.begin()) - 1;
    fz = (z - planes[p0]) / (planes[p0 + 1] - planes[p0]);
  }
  const int p1 = std::min(p0 + 1, int(planes.size()) - 1);

  const auto node = [&](int x, int y, int p) {
    return vol.at(std::clamp(x, 0, vol.width - 1), std::clamp(y, 0, vol.height - 1), p);
  };
  const auto plane = [&](int p) {
    const double top = std::lerp(node(x0, y0, p), node(x0 + 1, y0, p), fx);
    const double bottom = std::lerp(node(x0, y0 + 1, p), node(x0 + 1, y0 + 1, p), fx);
    return std::lerp(top, bottom, fy);
  };
  return std::lerp(plane(p0), plane(p1), fz);
}

}  // namespace

void DepthViewInput::validate() const {
  if (depth.width != camera.width() || depth.height != camera.height()) {
    throw std::invalid_argument("DepthViewInput: depth size does not match the camera");
  }
  for (double d : depth.data) {
    if (!std::isfinite(d) || d < 0.0) {
      throw std::invalid_argument("DepthViewInput: depths must be finite and nonnegative");
    }
  }
  if (volume.values.empty()) return;
  if (volume.width != camera.width() || volume.height != camera.height()) {
    throw std::invalid_argument("DepthViewInput: volume size does not match the camera");
  }
  if (volume.plane_depths.empty()) {
    throw std::invalid_argument("DepthViewInput: volume has no depth planes");
  }
  for (std::size_t i = 1; i < volume.plane_depths.size(); ++i) {
    if (!(volume.plane_depths[i] > volume.plane_depths[i - 1])) {
      throw std::invalid_argument("DepthViewInput: plane depths must be strictly increasing");
    }
  }
  for (double v : volume.values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("DepthViewInput: volume values must lie in [0, 1]");
    }
  }
}

std::vector<Vec3> unproject_depth(const DepthViewInput& view, int stride) {
  if (stride < 1) throw std::invalid_argument("unproject_depth: stride must be at least 1");
  view.validate();
  std::vector<Vec3> points;
  for (int py = 0; py < view.depth.height; py += stride) {
    for (int px = 0; px < view.depth.width; px += stride) {
      const double d = view.depth.data[std::size_t(py) * view.depth.width + px];
      if (d <= 0.0) continue;
      const Vec3 cam{(px + 0.5 - view.camera.cx()) / view.camera.fx() * d,
                     (py + 0.5 - view.camera.cy()) / view.camera.fy() * d, d};
      points.push_back(view.camera.to_world(cam));
    }
  }
  return points;
}

ConfidenceResult confidence_from_volume(const DepthViewInput& view,
                                        const std::vector<Vec3>& points) {
  view.validate();
  if (view.volume.values.empty()) {
    throw std::invalid_argument("confidence_from_volume: view has no probability volume");
  }
  ConfidenceResult out;
  out.gammas.reserve(points.size());
  for (const Vec3& p : points) {
    PerspectiveCoord pc;
    const bool visible = try_world_to_perspective(view.camera, p, &pc) && pc.u >= 0.0 &&
                         pc.u <= view.camera.width() && pc.v >= 0.0 &&
                         pc.v <= view.camera.height();
    if (!visible) {
      out.gammas.push_back(kConfidenceFloor);
      ++out.outside_frustum;
      continue;
    }
    out.gammas.push_back(sample_volume(view.volume, pc.u, pc.v, 1.0 / pc.w));
  }
  return out;
}

void PlyCloud::validate() const {
  if (!colors.empty() && colors.size() != positions.size()) {
    throw std::invalid_argument("PlyCloud: color count does not match positions");
  }
  if (!confidences.empty() && confidences.size() != positions.size()) {
    throw std::invalid_argument("PlyCloud: confidence count does not match positions");
  }
  if (feature_dim < 0) throw std::invalid_argument("PlyCloud: negative feature dimension");
  if (features.size() != positions.size() * std::size_t(feature_dim)) {
    throw std::invalid_argument("PlyCloud: feature count does not match positions");
  }
}

namespace {

enum class PlyType { kF32, kF64, kU8, kI8, kU16, kI16, kU32, kI32 };

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kF64:
      return 8;
    case PlyType::kF32:
    case PlyType::kU32:
    case PlyType::kI32:
      return 4;
    case PlyType::kU16:
    case PlyType::kI16:
      return 2;
    default:
      return 1;
  }
}

PlyType parse_type(const std::string& token, int line) {
  if (token == "float" || token == "float32") return PlyType::kF32;
  if (token == "double" || token == "float64") return PlyType::kF64;
  if (token == "uchar" || token == "uint8") return PlyType::kU8;
  if (token == "char" || token == "int8") return PlyType::kI8;
  if (token == "ushort" || token == "uint16") return PlyType::kU16;
  if (token == "short" || token == "int16") return PlyType::kI16;
  if (token == "uint" || token == "uint32") return PlyType::kU32;
  if (token == "int" || token == "int32") return PlyType::kI32;
  throw std::runtime_error("load_ply: unknown property type '" + token + "' on line " +
                           std::to_string(line));
}

// Where a vertex property's value lands.
enum class Dest { kX, kY, kZ, kRed, kGreen, kBlue, kConfidence, kFeature, kSkip };

struct PlyProperty {
  PlyType type = PlyType::kF32;
  Dest dest = Dest::kSkip;
  int feature_index = -1;
};

double decode_scalar(const unsigned char* bytes, PlyType type) {
  switch (type) {
    case PlyType::kF32: {
      float f;
      std::memcpy(&f, bytes, 4);
      return double(f);
    }
    case PlyType::kF64: {
      double d;
      std::memcpy(&d, bytes, 8);
      return d;
    }
    case PlyType::kU8:
      return double(bytes[0]);
    case PlyType::kI8:
      return double(static_cast<signed char>(bytes[0]));
    case PlyType::kU16: {
      std::uint16_t v;
      std::memcpy(&v, bytes, 2);
      return double(v);
    }
    case PlyType::kI16: {
      std::int16_t v;
      std::memcpy(&v, bytes, 2);
      return double(v);
    }
    case PlyType::kU32: {
      std::uint32_t v;
      std::memcpy(&v, bytes, 4);
      return double(v);
    }
    default: {
      std::int32_t v;
      std::memcpy(&v, bytes, 4);
      return double(v);
    }
  }
}

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> properties;
  int feature_dim = 0;
  bool has_colors = false;
  bool has_confidence = false;
};

PlyHeader parse_ply_header(std::istream& in) {
  const auto fail = [](int line, const std::string& what) {
    throw std::runtime_error("load_ply: " + what + " on line " + std::to_string(line));
  };
  const auto next_line = [&](int& line) {
    std::string text;
    if (!std::getline(in, text)) fail(line + 1, "unexpected end of header");
    if (!text.empty() && text.back() == '\r') text.pop_back();
    ++line;
    return text;
  };

  int line = 0;
  if (next_line(line) != "ply") fail(line, "missing 'ply' magic");
  const std::string format = next_line(line);
  PlyHeader header;
  if (format == "format binary_little_endian 1.0") {
    header.binary = true;
  } else if (format != "format ascii 1.0") {
    fail(line, "unsupported format '" + format + "'");
  }

  bool in_vertex_element = false;
  bool saw_vertex_element = false;
  std::vector<bool> feature_seen;
  bool red = false, green = false, blue = false;
  while (true) {
    const std::string text = next_line(line);
    std::istringstream tokens(text);
    std::string word;
    tokens >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "element") {
      std::string name;
      long long count = -1;
      if (!(tokens >> name >> count) || count < 0) fail(line, "malformed element declaration");
      if (name == "vertex") {
        if (saw_vertex_element) fail(line, "repeated vertex element");
        saw_vertex_element = true;
        in_vertex_element = true;
        header.vertex_count = std::size_t(count);
      } else {
        if (count != 0) fail(line, "unsupported element '" + name + "'");
        in_vertex_element = false;
      }
      continue;
    }
    if (word == "property") {
      std::string type_token, name;
      if (!(tokens >> type_token)) fail(line, "malformed property declaration");
      if (type_token == "list") fail(line, "list properties are unsupported");
      if (!(tokens >> name)) fail(line, "malformed property declaration");
      if (!saw_vertex_element) fail(line, "property before any element");
      if (!in_vertex_element) continue;  // property of a zero-count element

      PlyProperty prop;
      prop.type = parse_type(type_token, line);
      if (name == "x") {
        prop.dest = Dest::kX;
      } else if (name == "y") {
        prop.dest = Dest::kY;
      } else if (name == "z") {
        prop.dest = Dest::kZ;
      } else if (name == "red") {
        prop.dest = Dest::kRed;
        red = true;
      } else if (name == "green") {
        prop.dest = Dest::kGreen;
        green = true;
      } else if (name == "blue") {
        prop.dest = Dest::kBlue;
        blue = true;
      } else if (name == "confidence") {
        prop.dest = Dest::kConfidence;
        header.has_confidence = true;
      } else if (name.rfind("feature_", 0) == 0) {
        prop.dest = Dest::kFeature;
        std::size_t parsed = 0;
        int index = -1;
        try {
          index = std::stoi(name.substr(8), &parsed);
        } catch (const std::exception&) {
          fail(line, "malformed feature property '" + name + "'");
        }
        if (parsed != name.size() - 8 || index < 0) {
          fail(line, "malformed feature property '" + name + "'");
        }
        prop.feature_index = index;
        if (std::size_t(index) >= feature_seen.size()) feature_seen.resize(index + 1, false);
        if (feature_seen[index]) fail(line, "repeated property '" + name + "'");
        feature_seen[index] = true;
      }
      header.properties.push_back(prop);
      continue;
    }
    fail(line, "unrecognized header line '" + text + "'");
  }

  if (!saw_vertex_element) fail(line, "missing vertex element");
  const auto has_dest = [&](Dest d) {
    return std::any_of(header.properties.begin(), header.properties.end(),
                       [&](const PlyProperty& p) { return p.dest == d; });
  };
  if (!has_dest(Dest::kX) || !has_dest(Dest::kY) || !has_dest(Dest::kZ)) {
    fail(line, "vertex element lacks x, y, z");
  }
  if (red != green || green != blue) fail(line, "incomplete red/green/blue channels");
  header.has_colors = red;
  for (std::size_t i = 0; i < feature_seen.size(); ++i) {
    if (!feature_seen[i]) {
      fail(line, "missing property 'feature_" + std::to_string(i) + "'");
    }
  }
  header.feature_dim = int(feature_seen.size());
  return header;
}

}  // namespace

PlyCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ply: cannot open " + path.string());
  const PlyHeader header = parse_ply_header(in);

  PlyCloud cloud;
  cloud.feature_dim = header.feature_dim;
  cloud.positions.resize(header.vertex_count);
  if (header.has_colors) cloud.colors.resize(header.vertex_count);
  if (header.has_confidence) cloud.confidences.resize(header.vertex_count);
  cloud.features.resize(header.vertex_count * std::size_t(header.feature_dim), 0.0);

  const auto store = [&](std::size_t i, const PlyProperty& prop, double value) {
    switch (prop.dest) {
      case Dest::kX:
        cloud.positions[i].x = value;
        break;
      case Dest::kY:
        cloud.positions[i].y = value;
        break;
      case Dest::kZ:
        cloud.positions[i].z = value;
        break;
      case Dest::kRed:
        cloud.colors[i][0] = std::uint8_t(value);
        break;
      case Dest::kGreen:
        cloud.colors[i][1] = std::uint8_t(value);
        break;
      case Dest::kBlue:
        cloud.colors[i][2] = std::uint8_t(value);
        break;
      case Dest::kConfidence:
        cloud.confidences[i] = value;
        break;
      case Dest::kFeature:
        cloud.features[i * std::size_t(header.feature_dim) + prop.feature_index] = value;
        break;
      case Dest::kSkip:
        break;
    }
  };

  if (header.binary) {
    std::size_t record = 0;
    for (const PlyProperty& p : header.properties) record += type_size(p.type);
    std::vector<unsigned char> data(header.vertex_count * record);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
    if (std::size_t(in.gcount()) != data.size()) {
      throw std::runtime_error("load_ply: vertex data truncated at byte " +
                               std::to_string(in.gcount()) + " of " +
                               std::to_string(data.size()));
    }
    const unsigned char* cursor = data.data();
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      for (const PlyProperty& prop : header.properties) {
        if (prop.dest != Dest::kSkip) store(i, prop, decode_scalar(cursor, prop.type));
        cursor += type_size(prop.type);
      }
    }
  } else {
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      for (const PlyProperty& prop : header.properties) {
        double value;
        if (!(in >> value)) {
          throw std::runtime_error("load_ply: malformed or missing value in vertex " +
                                   std::to_string(i));
        }
        // the declared type is the storage type, so a float32 column holds
        // float32 values regardless of the text encoding
        if (prop.type == PlyType::kF32) value = double(float(value));
        if (prop.dest != Dest::kSkip) store(i, prop, value);
      }
    }
  }
  cloud.validate();
  return cloud;
}

void save_ply(const std::filesystem::path& path, const PlyCloud& cloud, bool binary) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_ply: cannot open " + path.string());

  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (!cloud.colors.empty()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (!cloud.confidences.empty()) out << "property float confidence\n";
  for (int d = 0; d < cloud.feature_dim; ++d) out << "property float feature_" << d << "\n";
  out << "end_header\n";

  out << std::setprecision(9);
  std::vector<float> scalars;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    scalars.clear();
    scalars.push_back(float(cloud.positions[i].x));
    scalars.push_back(float(cloud.positions[i].y));
    scalars.push_back(float(cloud.positions[i].z));
    if (binary) {
      out.write(reinterpret_cast<const char*>(scalars.data()),
                std::streamsize(scalars.size() * sizeof(float)));
      if (!cloud.colors.empty()) {
        out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
      }
      scalars.clear();
    } else {
      for (float v : scalars) out << v << " ";
      if (!cloud.colors.empty()) {
        out << int(cloud.colors[i][0]) << " " << int(cloud.colors[i][1]) << " "
            << int(cloud.colors[i][2]) << " ";
      }
      scalars.clear();
    }
    if (!cloud.confidences.empty()) scalars.push_back(float(cloud.confidences[i]));
    for (int d = 0; d < cloud.feature_dim; ++d) {
      scalars.push_back(float(cloud.features[i * std::size_t(cloud.feature_dim) + d]));
    }
    if (binary) {
      out.write(reinterpret_cast<const char*>(scalars.data()),
                std::streamsize(scalars.size() * sizeof(float)));
    } else {
      for (float v : scalars) out << v << " ";
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("save_ply: write failed for " + path.string());
}

NeuralPointCloud init_cloud(const std::vector<Vec3>& positions,
                            const std::vector<double>& gammas,
                            const std::vector<std::array<std::uint8_t, 3>>& colors,
                            const FeatureInitStrategy& strategy, int feature_dim) {
  if (feature_dim < 1) throw std::invalid_argument("init_cloud: feature_dim must be at least 1");
  if (!gammas.empty() && gammas.size() != positions.size()) {
    throw std::invalid_argument("init_cloud: gamma count does not match positions");
  }
  const bool from_colors = strategy.kind == FeatureInitStrategy::Kind::kFromPointColors;
  if (from_colors) {
    if (colors.size() != positions.size()) {
      throw std::invalid_argument("init_cloud: color init needs one color per point");
    }
    if (feature_dim < 3) {
      throw std::invalid_argument("init_cloud: color init needs at least 3 feature channels");
    }
  }

  NeuralPointCloud cloud;
  cloud.feature_dim = feature_dim;
  cloud.positions = positions;
  cloud.features.assign(positions.size() * std::size_t(feature_dim), 0.0);
  cloud.gamma_logits.resize(positions.size());

  std::mt19937_64 rng(strategy.seed);
  std::normal_distribution<double> kaiming(0.0, std::sqrt(2.0 / feature_dim));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double* row = cloud.feature_row(i);
    switch (strategy.kind) {
      case FeatureInitStrategy::Kind::kZeros:
        break;
      case FeatureInitStrategy::Kind::kKaimingRandom:
        for (int d = 0; d < feature_dim; ++d) row[d] = kaiming(rng);
        break;
      case FeatureInitStrategy::Kind::kFromPointColors:
        for (int c = 0; c < 3; ++c) row[c] = colors[i][c] / 255.0;
        for (int d = 3; d < feature_dim; ++d) row[d] = kaiming(rng);
        break;
    }
    const double g = std::clamp(gammas.empty() ? 0.3 : gammas[i], 1e-4, 1.0 - 1e-4);
    cloud.gamma_logits[i] = logit(g);
  }
  cloud.validate();
  return cloud;
}

NeuralPointCloud merge_clouds(const std::vector<NeuralPointCloud>& clouds) {
  if (clouds.empty()) throw std::invalid_argument("merge_clouds: no clouds given");
  NeuralPointCloud out;
  out.feature_dim = clouds.front().feature_dim;
  for (const NeuralPointCloud& c : clouds) {
    if (c.feature_dim != out.feature_dim) {
      throw std::invalid_argument("merge_clouds: feature dimensions differ");
    }
    out.positions.insert(out.positions.end(), c.positions.begin(), c.positions.end());
    out.features.insert(out.features.end(), c.features.begin(), c.features.end());
    out.gamma_logits.insert(out.gamma_logits.end(), c.gamma_logits.begin(),
                            c.gamma_logits.end());
  }
  out.validate();
  return out;
}

}  // namespace pnrf
