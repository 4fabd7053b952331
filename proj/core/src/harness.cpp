#include "pnrf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pnrf/cameras_txt.hpp"

namespace pnrf {
namespace {

constexpr double kGoldenAngle = 2.3999632297286533;  // radians between spiral views

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Slab intersection with an axis-aligned box; false when disjoint. The
// returned interval may lie behind the ray origin.
bool ray_box(const Ray& ray, const Vec3& lo, const Vec3& hi, double* t0, double* t1) {
  double tmin = -1e300;
  double tmax = 1e300;
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < l[a] || o[a] > h[a]) return false;
      continue;
    }
    double ta = (l[a] - o[a]) / d[a];
    double tb = (h[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    tmin = std::max(tmin, ta);
    tmax = std::min(tmax, tb);
  }
  if (tmax < tmin) return false;
  *t0 = tmin;
  *t1 = tmax;
  return true;
}

bool ray_sphere(const Ray& ray, const Vec3& center, double radius, double* t0, double* t1) {
  const Vec3 oc = ray.origin - center;
  const double b = 2.0 * ray.direction.dot(oc);
  const double c = oc.squared_norm() - radius * radius;
  const double disc = b * b - 4.0 * c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  *t0 = (-b - s) * 0.5;
  *t1 = (-b + s) * 0.5;
  return true;
}

void add_boundaries(const Solid& s, const Ray& ray, std::vector<double>* ts) {
  double a = 0.0;
  double b = 0.0;
  const bool hit = s.shape == Solid::Shape::kSphere
                       ? ray_sphere(ray, s.center, s.radius, &a, &b)
                       : ray_box(ray, s.box_min, s.box_max, &a, &b);
  if (!hit) return;
  ts->push_back(a);
  ts->push_back(b);
}

Vec3 random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 0.7);
  const double r = u(rng);
  const double g = u(rng);
  const double b = u(rng);
  return {r, g, b};
}

Vec3 random_slope(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  const double x = u(rng);
  const double y = u(rng);
  const double z = u(rng);
  return Vec3{x, y, z} / radius;
}

Vec3 unit_sphere_dir(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uz(-1.0, 1.0);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * M_PI);
  const double z = uz(rng);
  const double a = ua(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(a), s * std::sin(a), z};
}

const char* kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::kSphere: return "sphere";
    case SceneKind::kTwoSpheres: return "two_spheres";
    case SceneKind::kBoxWithHole: return "box_with_hole";
  }
  throw std::logic_error("unknown scene kind");
}

SceneKind kind_from_name(const std::string& name) {
  if (name == "sphere") return SceneKind::kSphere;
  if (name == "two_spheres") return SceneKind::kTwoSpheres;
  if (name == "box_with_hole") return SceneKind::kBoxWithHole;
  throw std::runtime_error("unknown scene kind: " + name);
}

}  // namespace

void SceneParams::validate(SceneKind kind) const {
  if (!(radius > 0.0)) throw std::invalid_argument("scene: radius must be positive");
  if (!(density > 0.0)) throw std::invalid_argument("scene: density must be positive");
  if (kind == SceneKind::kTwoSpheres) {
    if (!(separation > 0.0)) throw std::invalid_argument("scene: separation must be positive");
    if (second_density < 0.0) throw std::invalid_argument("scene: second density must be >= 0");
  }
  if (kind == SceneKind::kBoxWithHole) {
    if (!(hole_half_width > 0.0) || !(hole_half_width < radius)) {
      throw std::invalid_argument("scene: hole half width must lie in (0, radius)");
    }
  }
}

bool Solid::contains(const Vec3& x) const {
  if (shape == Shape::kSphere) return (x - center).squared_norm() <= radius * radius;
  return x.x >= box_min.x && x.x <= box_max.x && x.y >= box_min.y && x.y <= box_max.y &&
         x.z >= box_min.z && x.z <= box_max.z;
}

Vec3 Solid::color_at(const Vec3& x) const {
  const Vec3 d = x - center;
  return {clamp01(color_base.x + color_slope.x * d.x), clamp01(color_base.y + color_slope.y * d.y),
          clamp01(color_base.z + color_slope.z * d.z)};
}

double AnalyticScene::density_at(const Vec3& x) const {
  for (const Solid& c : cavities) {
    if (c.contains(x)) return 0.0;
  }
  double best = 0.0;
  for (const Solid& s : solids) {
    if (s.contains(x)) best = std::max(best, s.density);
  }
  return best;
}

Vec3 AnalyticScene::color_at(const Vec3& x) const {
  for (const Solid& c : cavities) {
    if (c.contains(x)) return {0, 0, 0};
  }
  double best = 0.0;
  const Solid* owner = nullptr;
  for (const Solid& s : solids) {
    if (s.contains(x) && s.density > best) {
      best = s.density;
      owner = &s;
    }
  }
  return owner ? owner->color_at(x) : Vec3{0, 0, 0};
}

AnalyticScene make_scene(SceneKind kind, const SceneParams& params, std::uint64_t seed) {
  params.validate(kind);
  AnalyticScene scene;
  scene.kind = kind;
  scene.params = params;
  scene.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const double r = params.radius;
  switch (kind) {
    case SceneKind::kSphere: {
      Solid s;
      s.shape = Solid::Shape::kSphere;
      s.radius = r;
      s.density = params.density;
      s.color_base = random_color(rng);
      s.color_slope = random_slope(rng, r);
      scene.solids.push_back(s);
      scene.bbox_min = {-r, -r, -r};
      scene.bbox_max = {r, r, r};
      break;
    }
    case SceneKind::kTwoSpheres: {
      const double half = params.separation * 0.5;
      for (int i = 0; i < 2; ++i) {
        Solid s;
        s.shape = Solid::Shape::kSphere;
        s.center = {i == 0 ? -half : half, 0.0, 0.0};
        s.radius = r;
        s.density =
            (i == 1 && params.second_density > 0.0) ? params.second_density : params.density;
        s.color_base = random_color(rng);
        s.color_slope = random_slope(rng, r);
        scene.solids.push_back(s);
      }
      scene.bbox_min = {-half - r, -r, -r};
      scene.bbox_max = {half + r, r, r};
      break;
    }
    case SceneKind::kBoxWithHole: {
      Solid s;
      s.shape = Solid::Shape::kBox;
      s.box_min = {-r, -r, -r};
      s.box_max = {r, r, r};
      s.density = params.density;
      s.color_base = random_color(rng);
      s.color_slope = random_slope(rng, r);
      scene.solids.push_back(s);
      const double h = params.hole_half_width;
      Solid hole;
      hole.shape = Solid::Shape::kBox;
      hole.box_min = {-h, -h, -r - 1.0};  // extends past the faces to cut clean openings
      hole.box_max = {h, h, r + 1.0};
      scene.cavities.push_back(hole);
      scene.bbox_min = {-r, -r, -r};
      scene.bbox_max = {r, r, r};
      break;
    }
  }
  return scene;
}

bool first_hit(const AnalyticScene& scene, const Ray& ray, double* t_hit) {
  const double lo = std::max(ray.t_near, 0.0);
  const double hi = ray.t_far;
  std::vector<double> ts{lo, hi};
  for (const Solid& s : scene.solids) add_boundaries(s, ray, &ts);
  for (const Solid& c : scene.cavities) add_boundaries(c, ray, &ts);
  std::erase_if(ts, [&](double t) { return t < lo || t > hi; });
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1] - ts[i] < 1e-12) continue;
    const double mid = 0.5 * (ts[i] + ts[i + 1]);
    if (scene.density_at(ray.at(mid)) > 0.0) {
      *t_hit = ts[i];
      return true;
    }
  }
  return false;
}

ImageBuffer oracle_render(const AnalyticScene& scene, const CameraModel& camera, int samples,
                          const Vec3& background) {
  if (samples <= 0) throw std::invalid_argument("oracle_render: samples must be positive");
  ImageBuffer img(camera.width(), camera.height());
  for (int py = 0; py < camera.height(); ++py) {
    for (int px = 0; px < camera.width(); ++px) {
      const Ray ray = generate_ray(camera, px, py);
      Vec3 color = background;
      double t0 = 0.0;
      double t1 = 0.0;
      if (ray_box(ray, scene.bbox_min, scene.bbox_max, &t0, &t1) && t1 > 0.0) {
        t0 = std::max(t0, 0.0);
        const double delta = (t1 - t0) / samples;
        Vec3 acc{0, 0, 0};
        double transmittance = 1.0;
        for (int j = 0; j < samples; ++j) {
          const Vec3 x = ray.at(t0 + (j + 0.5) * delta);
          const double sigma = scene.density_at(x);
          if (sigma <= 0.0) continue;
          const double alpha = 1.0 - std::exp(-sigma * delta);
          acc += scene.color_at(x) * (transmittance * alpha);
          transmittance *= 1.0 - alpha;
        }
        color = acc + background * transmittance;
      }
      img.set(px, py, color);
    }
  }
  return img;
}

namespace {

// True when q sits strictly inside some solid other than `own`; such a point
// is not part of the union's surface.
bool buried(const AnalyticScene& scene, std::size_t own, const Vec3& q) {
  for (std::size_t i = 0; i < scene.solids.size(); ++i) {
    if (i == own) continue;
    const Solid& s = scene.solids[i];
    if (s.shape == Solid::Shape::kSphere) {
      if ((q - s.center).norm() < s.radius - 1e-12) return true;
    } else {
      if (q.x > s.box_min.x + 1e-12 && q.x < s.box_max.x - 1e-12 && q.y > s.box_min.y + 1e-12 &&
          q.y < s.box_max.y - 1e-12 && q.z > s.box_min.z + 1e-12 && q.z < s.box_max.z - 1e-12) {
        return true;
      }
    }
  }
  return false;
}

Vec3 sample_sphere_union(const AnalyticScene& scene, std::mt19937_64& rng) {
  // Pick a sphere proportional to its surface area, then reject samples
  // buried inside another sphere; the accepted points are area-uniform on
  // the union's surface.
  std::vector<double> cumulative;
  double total = 0.0;
  for (const Solid& s : scene.solids) {
    total += s.radius * s.radius;
    cumulative.push_back(total);
  }
  std::uniform_real_distribution<double> pick(0.0, total);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double u = pick(rng);
    std::size_t idx = std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    if (idx >= scene.solids.size()) idx = scene.solids.size() - 1;
    const Solid& s = scene.solids[idx];
    const Vec3 q = s.center + unit_sphere_dir(rng) * s.radius;
    if (!buried(scene, idx, q)) return q;
  }
  throw std::runtime_error("surface sampling failed: no exposed surface found");
}

Vec3 sample_box_with_hole(const AnalyticScene& scene, std::mt19937_64& rng) {
  const Solid& box = scene.solids.at(0);
  const Solid& hole = scene.cavities.at(0);
  const double r = 0.5 * (box.box_max.x - box.box_min.x);
  const double h = 0.5 * (hole.box_max.x - hole.box_min.x);
  // Faces: four solid sides, two pierced ends, four tunnel walls. The ends
  // are drawn over the full square and samples landing in the opening are
  // rejected, so they keep the full-square weight here.
  const double side = 4.0 * r * r;
  const double wall = 4.0 * h * r;
  const double areas[10] = {side, side, side, side, side, side, wall, wall, wall, wall};
  double total = 0.0;
  for (double a : areas) total += a;
  std::uniform_real_distribution<double> pick(0.0, total);
  std::uniform_real_distribution<double> uu(-1.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    double u = pick(rng);
    int face = 0;
    while (face < 9 && u >= areas[face]) {
      u -= areas[face];
      ++face;
    }
    const double a = uu(rng);
    const double b = uu(rng);
    switch (face) {
      case 0: return {r, a * r, b * r};
      case 1: return {-r, a * r, b * r};
      case 2: return {a * r, r, b * r};
      case 3: return {a * r, -r, b * r};
      case 4:
      case 5: {
        const Vec3 q{a * r, b * r, face == 4 ? r : -r};
        if (std::abs(q.x) < h && std::abs(q.y) < h) break;  // landed in the opening
        return q;
      }
      case 6: return {h, a * h, b * r};
      case 7: return {-h, a * h, b * r};
      case 8: return {a * h, h, b * r};
      case 9: return {a * h, -h, b * r};
    }
  }
  throw std::runtime_error("surface sampling failed: no exposed surface found");
}

}  // namespace

std::vector<Vec3> sample_surface_points(const AnalyticScene& scene, std::size_t n,
                                        std::uint64_t seed, const CapRemoval* cap) {
  if (scene.solids.empty()) throw std::invalid_argument("surface sampling: scene has no solids");
  std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ull);
  const Vec3 scene_center = (scene.bbox_min + scene.bbox_max) * 0.5;
  const double cos_cap = cap ? std::cos(cap->angle) : 2.0;
  const Vec3 cap_axis = cap ? cap->axis.normalized() : Vec3{0, 0, 1};
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 q = scene.kind == SceneKind::kBoxWithHole ? sample_box_with_hole(scene, rng)
                                                         : sample_sphere_union(scene, rng);
    if (cap) {
      const Vec3 d = q - scene_center;
      const double len = d.norm();
      if (len > 0.0 && d.dot(cap_axis) >= cos_cap * len) continue;  // dropped, not replaced
    }
    out.push_back(q);
  }
  return out;
}

double coverage(const std::vector<Vec3>& positions, const AnalyticScene& scene, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("coverage: tolerance must be positive");
  const auto probes = sample_surface_points(scene, 10000, 0x5eedu);
  if (positions.empty()) return 0.0;
  const double tol2 = tolerance * tolerance;
  std::size_t covered = 0;
  for (const Vec3& q : probes) {
    double best = 1e300;
    for (const Vec3& p : positions) best = std::min(best, (q - p).squared_norm());
    if (best <= tol2) ++covered;
  }
  return double(covered) / double(probes.size());
}

std::vector<const DatasetView*> SceneDataset::train_views() const {
  std::vector<const DatasetView*> out;
  for (const DatasetView& v : views) {
    if (!v.is_test) out.push_back(&v);
  }
  return out;
}

std::vector<const DatasetView*> SceneDataset::test_views() const {
  std::vector<const DatasetView*> out;
  for (const DatasetView& v : views) {
    if (v.is_test) out.push_back(&v);
  }
  return out;
}

namespace {

CameraModel look_at_camera(const Vec3& eye, const Vec3& target, double focal, int width,
                           int height) {
  const Vec3 forward = target - eye;
  if (!(forward.norm() > 0.0)) throw std::invalid_argument("camera eye coincides with target");
  const Vec3 z = forward.normalized();
  Vec3 up{0, 1, 0};
  if (std::abs(z.dot(up)) > 0.999) up = {1, 0, 0};
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  const std::array<double, 9> rot{x.x, x.y, x.z, y.x, y.y, y.z, z.x, z.y, z.z};
  const Vec3 t{-x.dot(eye), -y.dot(eye), -z.dot(eye)};
  return CameraModel(focal, focal, width * 0.5, height * 0.5, width, height, rot, t);
}

}  // namespace

SceneDataset make_dataset(const AnalyticScene& scene, int n_train, int n_test, int width,
                          int height, std::uint64_t seed, const DatasetOptions& opt) {
  if (n_train <= 0 || n_test < 0) {
    throw std::invalid_argument("dataset: need at least one training view");
  }
  if (width <= 0 || height <= 0) throw std::invalid_argument("dataset: image size must be positive");
  if (opt.depth_planes == 1 || opt.depth_planes < 0) {
    throw std::invalid_argument("dataset: depth volumes need at least two planes");
  }
  if (opt.oracle_samples <= 0) throw std::invalid_argument("dataset: oracle samples must be positive");

  const Vec3 center = (scene.bbox_min + scene.bbox_max) * 0.5;
  const double bounding_radius = ((scene.bbox_max - scene.bbox_min) * 0.5).norm();
  if (!(bounding_radius > 0.0)) throw std::invalid_argument("dataset: scene has no extent");
  const double dist = opt.camera_distance > 0.0 ? opt.camera_distance : 3.0 * bounding_radius;
  if (!(dist > bounding_radius)) {
    throw std::invalid_argument("dataset: camera distance puts views inside the scene");
  }
  const double half_angle = 1.25 * std::asin(std::min(1.0, bounding_radius / dist));
  const double focal = 0.5 * std::min(width, height) / std::tan(half_angle);
  const double seed_phase = double(seed % 4096) * (2.0 * M_PI / 4096.0);

  SceneDataset ds;
  ds.scene = scene;
  ds.background = opt.background;
  const int total = n_train + n_test;
  ds.views.reserve(std::size_t(total));
  for (int i = 0; i < total; ++i) {
    const bool is_test = i >= n_train;
    const int j = is_test ? i - n_train : i;
    const int split_size = is_test ? n_test : n_train;
    const double azimuth = j * kGoldenAngle + seed_phase + (is_test ? 0.5 * kGoldenAngle : 0.0);
    const double elev_frac = split_size > 1 ? double(j) / double(split_size - 1) : 0.5;
    const double elevation = -0.4 + 0.8 * elev_frac;
    const Vec3 dir{std::cos(elevation) * std::cos(azimuth), std::sin(elevation),
                   std::cos(elevation) * std::sin(azimuth)};
    const Vec3 eye = center + dir * dist;

    DatasetView view;
    view.view_id = i;
    view.is_test = is_test;
    view.camera = look_at_camera(eye, center, focal, width, height);
    view.image = oracle_render(scene, view.camera, opt.oracle_samples, opt.background);

    if (opt.with_depth) {
      view.has_depth = true;
      view.depth = GrayBuffer(width, height);
      for (int py = 0; py < height; ++py) {
        for (int px = 0; px < width; ++px) {
          const Ray ray = generate_ray(view.camera, px, py);
          double t = 0.0;
          if (first_hit(scene, ray, &t)) {
            view.depth.data[std::size_t(py) * width + px] = view.camera.to_camera(ray.at(t)).z;
          }
        }
      }
      if (opt.depth_planes >= 2) {
        const double z_lo = std::max(dist - bounding_radius, 1e-6);
        const double z_hi = dist + bounding_radius;
        const int planes = opt.depth_planes;
        const double spacing = (z_hi - z_lo) / (planes - 1);
        view.probvol.width = width;
        view.probvol.height = height;
        view.probvol.plane_depths.resize(std::size_t(planes));
        for (int p = 0; p < planes; ++p) view.probvol.plane_depths[std::size_t(p)] = z_lo + p * spacing;
        view.probvol.values.assign(std::size_t(width) * height * planes, 0.0);
        for (int py = 0; py < height; ++py) {
          for (int px = 0; px < width; ++px) {
            const double d = view.depth.data[std::size_t(py) * width + px];
            if (d <= 0.0) continue;
            for (int p = 0; p < planes; ++p) {
              const double dz = view.probvol.plane_depths[std::size_t(p)] - d;
              view.probvol.at(px, py, p) = std::exp(-dz * dz / (2.0 * spacing * spacing));
            }
          }
        }
      }
    }
    ds.views.push_back(std::move(view));
  }
  return ds;
}

namespace {

std::string numbered(int id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.%s", id, ext);
  return buf;
}

}  // namespace

void save_dataset(const SceneDataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  bool any_depth = false;
  bool any_volume = false;
  for (const DatasetView& v : dataset.views) {
    any_depth = any_depth || v.has_depth;
    any_volume = any_volume || v.probvol.plane_count() > 0;
  }
  if (any_depth) fs::create_directories(dir / "depth");
  if (any_volume) fs::create_directories(dir / "probvol");

  std::vector<View> cams;
  cams.reserve(dataset.views.size());
  for (const DatasetView& v : dataset.views) cams.push_back({v.view_id, v.camera});
  write_cameras_txt(dir / "cameras.txt", cams);

  for (const DatasetView& v : dataset.views) {
    write_ppm(dir / (v.is_test ? "test" : "train") / numbered(v.view_id, "ppm"), v.image);
    if (v.has_depth) write_pfm(dir / "depth" / numbered(v.view_id, "pfm"), v.depth);
    if (v.probvol.plane_count() > 0) {
      write_probvol(dir / "probvol" / numbered(v.view_id, "bin"), v.probvol);
    }
  }

  std::ofstream out(dir / "scene.txt");
  if (!out) throw std::runtime_error("cannot open for writing: " + (dir / "scene.txt").string());
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const SceneParams& p = dataset.scene.params;
  out << "kind " << kind_name(dataset.scene.kind) << "\n";
  out << "seed " << dataset.scene.seed << "\n";
  out << "radius " << num(p.radius) << "\n";
  out << "density " << num(p.density) << "\n";
  out << "second_density " << num(p.second_density) << "\n";
  out << "separation " << num(p.separation) << "\n";
  out << "hole_half_width " << num(p.hole_half_width) << "\n";
  out << "background " << num(dataset.background.x) << " " << num(dataset.background.y) << " "
      << num(dataset.background.z) << "\n";
  out << "train";
  for (const DatasetView& v : dataset.views) {
    if (!v.is_test) out << " " << v.view_id;
  }
  out << "\ntest";
  for (const DatasetView& v : dataset.views) {
    if (v.is_test) out << " " << v.view_id;
  }
  out << "\n";
  if (!out) throw std::runtime_error("write failed: " + (dir / "scene.txt").string());
}

SceneDataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(dir / "scene.txt");
  if (!in) throw std::runtime_error("cannot open: " + (dir / "scene.txt").string());

  std::string kind_str;
  std::uint64_t seed = 0;
  SceneParams params;
  Vec3 background;
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    bool ok = true;
    if (key == "kind") {
      ok = bool(ls >> kind_str);
    } else if (key == "seed") {
      ok = bool(ls >> seed);
    } else if (key == "radius") {
      ok = bool(ls >> params.radius);
    } else if (key == "density") {
      ok = bool(ls >> params.density);
    } else if (key == "second_density") {
      ok = bool(ls >> params.second_density);
    } else if (key == "separation") {
      ok = bool(ls >> params.separation);
    } else if (key == "hole_half_width") {
      ok = bool(ls >> params.hole_half_width);
    } else if (key == "background") {
      ok = bool(ls >> background.x >> background.y >> background.z);
    } else if (key == "train") {
      int id = 0;
      while (ls >> id) train_ids.push_back(id);
    } else if (key == "test") {
      int id = 0;
      while (ls >> id) test_ids.push_back(id);
    } else {
      throw std::runtime_error((dir / "scene.txt").string() + ":" + std::to_string(line_no) +
                               ": unknown key: " + key);
    }
    if (!ok) {
      throw std::runtime_error((dir / "scene.txt").string() + ":" + std::to_string(line_no) +
                               ": malformed value for " + key);
    }
  }
  if (kind_str.empty()) throw std::runtime_error((dir / "scene.txt").string() + ": missing kind");

  SceneDataset ds;
  ds.scene = make_scene(kind_from_name(kind_str), params, seed);
  ds.background = background;

  std::map<int, CameraModel> cameras;
  for (const View& v : read_cameras_txt(dir / "cameras.txt")) cameras.emplace(v.view_id, v.camera);

  auto load_view = [&](int id, bool is_test) {
    DatasetView view;
    view.view_id = id;
    view.is_test = is_test;
    const auto it = cameras.find(id);
    if (it == cameras.end()) {
      throw std::runtime_error("view " + std::to_string(id) + " missing from cameras.txt");
    }
    view.camera = it->second;
    view.image = read_ppm(dir / (is_test ? "test" : "train") / numbered(id, "ppm"));
    if (view.image.width != view.camera.width() || view.image.height != view.camera.height()) {
      throw std::runtime_error("view " + std::to_string(id) + ": image size disagrees with camera");
    }
    const fs::path depth_path = dir / "depth" / numbered(id, "pfm");
    if (fs::exists(depth_path)) {
      view.depth = read_pfm(depth_path);
      view.has_depth = true;
    }
    const fs::path vol_path = dir / "probvol" / numbered(id, "bin");
    if (fs::exists(vol_path)) view.probvol = read_probvol(vol_path);
    ds.views.push_back(std::move(view));
  };
  for (int id : train_ids) load_view(id, false);
  for (int id : test_ids) load_view(id, true);
  return ds;
}

}  // namespace pnrf
