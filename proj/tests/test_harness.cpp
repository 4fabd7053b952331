#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "pnrf/camera.hpp"
#include "pnrf/harness.hpp"
#include "pnrf/pfm.hpp"

using namespace pnrf;

namespace {

std::filesystem::path temp_dir(const char* leaf) {
  auto dir = std::filesystem::temp_directory_path() / "pnrf_harness_test" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const std::array<double, 9> kIdentity{1, 0, 0, 0, 1, 0, 0, 0, 1};

// Identity-orientation camera whose center sits at -dist on the z axis.
CameraModel frontal_camera(double dist, int size = 64, double focal = 100.0) {
  return CameraModel(focal, focal, size * 0.5, size * 0.5, size, size, kIdentity, {0, 0, dist});
}

AnalyticScene white_slab(double z0, double z1) {
  AnalyticScene scene;
  Solid s;
  s.shape = Solid::Shape::kBox;
  s.box_min = {-10, -10, z0};
  s.box_max = {10, 10, z1};
  s.density = 1.0;
  s.color_base = {1, 1, 1};
  scene.solids.push_back(s);
  scene.bbox_min = s.box_min;
  scene.bbox_max = s.box_max;
  return scene;
}

double max_pixel_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

double mean_pixel_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
  return sum / double(a.data.size());
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("scene parameters are validated") {
  SceneParams p;
  p.radius = 0.0;
  CHECK_THROWS_AS(make_scene(SceneKind::kSphere, p, 1), std::invalid_argument);
  p = {};
  p.density = -1.0;
  CHECK_THROWS_AS(make_scene(SceneKind::kSphere, p, 1), std::invalid_argument);
  p = {};
  p.hole_half_width = 1.5;  // must stay inside the box
  CHECK_THROWS_AS(make_scene(SceneKind::kBoxWithHole, p, 1), std::invalid_argument);
  p = {};
  p.separation = 0.0;
  CHECK_THROWS_AS(make_scene(SceneKind::kTwoSpheres, p, 1), std::invalid_argument);
  CHECK_NOTHROW(make_scene(SceneKind::kSphere, SceneParams{}, 1));
}

TEST_CASE("sphere scene density and color closed forms") {
  SceneParams p;
  p.density = 5.0;
  const auto scene = make_scene(SceneKind::kSphere, p, 42);
  CHECK(scene.density_at({0, 0, 0}) == 5.0);
  CHECK(scene.density_at({0.99, 0, 0}) == 5.0);
  CHECK(scene.density_at({1.5, 0, 0}) == 0.0);
  CHECK(scene.color_at({0, 0, 0}) == scene.solids[0].color_base);
  for (const Vec3& x : {Vec3{0.5, -0.5, 0.3}, Vec3{-0.9, 0, 0}, Vec3{0, 0.2, -0.7}}) {
    const Vec3 c = scene.color_at(x);
    CHECK(c.x >= 0.0);
    CHECK(c.x <= 1.0);
    CHECK(c.y >= 0.0);
    CHECK(c.y <= 1.0);
    CHECK(c.z >= 0.0);
    CHECK(c.z <= 1.0);
  }
  // identical seeds rebuild identical colors, different seeds do not
  const auto again = make_scene(SceneKind::kSphere, p, 42);
  CHECK(again.solids[0].color_base == scene.solids[0].color_base);
  CHECK(again.solids[0].color_slope == scene.solids[0].color_slope);
  const auto other = make_scene(SceneKind::kSphere, p, 43);
  CHECK(!(other.solids[0].color_base == scene.solids[0].color_base));
}

TEST_CASE("two sphere scene keeps a gap and takes the max density in overlap") {
  SceneParams p;
  p.separation = 2.6;
  const auto apart = make_scene(SceneKind::kTwoSpheres, p, 3);
  CHECK(apart.density_at({0, 0, 0}) == 0.0);  // midpoint lies between the spheres
  CHECK(apart.density_at({-1.3, 0, 0}) == p.density);
  CHECK(apart.density_at({1.3, 0, 0}) == p.density);

  p.separation = 1.0;  // overlapping
  p.density = 2.0;
  p.second_density = 7.0;
  const auto merged = make_scene(SceneKind::kTwoSpheres, p, 3);
  CHECK(merged.density_at({0, 0, 0}) == 7.0);
  CHECK(merged.color_at({0, 0, 0}) == merged.solids[1].color_at({0, 0, 0}));

  // equal densities: the first solid wins the color tie
  p.second_density = 2.0;
  const auto tied = make_scene(SceneKind::kTwoSpheres, p, 3);
  CHECK(tied.density_at({0, 0, 0}) == 2.0);
  CHECK(tied.color_at({0, 0, 0}) == tied.solids[0].color_at({0, 0, 0}));
}

TEST_CASE("box with hole is hollow along the tunnel") {
  SceneParams p;
  p.hole_half_width = 0.4;
  const auto scene = make_scene(SceneKind::kBoxWithHole, p, 9);
  CHECK(scene.density_at({0, 0, 0}) == 0.0);
  CHECK(scene.density_at({0, 0, 0.99}) == 0.0);
  CHECK(scene.density_at({0, 0, -0.99}) == 0.0);
  CHECK(scene.density_at({0.7, 0.7, 0}) == p.density);
  CHECK(scene.density_at({0.7, 0, 0.9}) == p.density);
  CHECK(scene.density_at({1.2, 0, 0}) == 0.0);
}

TEST_CASE("first hit solves sphere boundaries exactly") {
  SceneParams p;
  p.radius = 0.7;
  const auto scene = make_scene(SceneKind::kSphere, p, 5);
  Ray ray;
  ray.origin = {0, 0, -3};
  ray.direction = {0, 0, 1};
  double t = 0.0;
  REQUIRE(first_hit(scene, ray, &t));
  CHECK(std::abs(t - (3.0 - 0.7)) <= 1e-12);

  ray.origin = {2, 0, -3};  // passes beside the sphere
  CHECK_FALSE(first_hit(scene, ray, &t));

  ray.origin = {0, 0, 0};  // starts inside
  REQUIRE(first_hit(scene, ray, &t));
  CHECK(t == 0.0);
}

TEST_CASE("first hit respects the tunnel of a pierced box") {
  const auto scene = make_scene(SceneKind::kBoxWithHole, SceneParams{}, 5);
  Ray ray;
  ray.origin = {0, 0, -3};
  ray.direction = {0, 0, 1};
  double t = 0.0;
  CHECK_FALSE(first_hit(scene, ray, &t));  // straight through the hole

  ray.origin = {0.7, 0, -3};
  REQUIRE(first_hit(scene, ray, &t));
  CHECK(std::abs(t - 2.0) <= 1e-12);  // front face at z = -1
}

TEST_CASE("dense marching reproduces the closed form for a uniform slab") {
  const auto scene = white_slab(0.5, 1.5);
  const auto camera = frontal_camera(0.0);
  const auto img = oracle_render(scene, camera, 512);
  for (int py = 0; py < camera.height(); ++py) {
    for (int px = 0; px < camera.width(); ++px) {
      const Ray ray = generate_ray(camera, px, py);
      const double expected = 1.0 - std::exp(-1.0 / ray.direction.z);
      const Vec3 c = img.get(px, py);
      CHECK(std::abs(c.x - expected) <= 1e-9);
      CHECK(std::abs(c.y - expected) <= 1e-9);
      CHECK(std::abs(c.z - expected) <= 1e-9);
    }
  }
  // the central pixel sees unit optical depth, within the slight ray tilt
  CHECK(img.get(32, 32).x == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-4));
}

TEST_CASE("marching error shrinks as the sample count grows") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 11);
  const auto camera = frontal_camera(3.0);
  const auto reference = oracle_render(scene, camera, 8192);
  const auto coarse = oracle_render(scene, camera, 128);
  const auto fine = oracle_render(scene, camera, 512);
  CHECK(mean_pixel_diff(fine, reference) < mean_pixel_diff(coarse, reference));
  CHECK(mean_pixel_diff(fine, reference) < 3e-3);
  CHECK(max_pixel_diff(fine, reference) < 0.06);
}

TEST_CASE("rays that miss the scene return the background exactly") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 11);
  const auto camera = frontal_camera(3.0);
  const Vec3 bg{0.25, 0.5, 0.125};
  const auto img = oracle_render(scene, camera, 64, bg);
  CHECK(img.get(0, 0) == bg);  // corner ray passes outside the sphere
  CHECK(!(img.get(32, 32) == bg));

  AnalyticScene empty;
  const auto blank = oracle_render(empty, camera, 16, bg);
  for (int py = 0; py < camera.height(); ++py) {
    for (int px = 0; px < camera.width(); ++px) CHECK(blank.get(px, py) == bg);
  }
  double t = 0.0;
  Ray ray;
  ray.origin = {0, 0, -3};
  CHECK_FALSE(first_hit(empty, ray, &t));
}

TEST_CASE("surface samples lie on the sphere and fill all octants") {
  SceneParams p;
  p.radius = 2.0;
  const auto scene = make_scene(SceneKind::kSphere, p, 21);
  const std::size_t n = 80000;
  const auto pts = sample_surface_points(scene, n, 77);
  REQUIRE(pts.size() == n);
  std::array<int, 8> octant{};
  for (const Vec3& q : pts) {
    CHECK(std::abs(q.norm() - 2.0) <= 1e-9);
    octant[std::size_t((q.x > 0) + 2 * (q.y > 0) + 4 * (q.z > 0))] += 1;
  }
  // each octant holds n/8 in expectation; allow five binomial sigmas
  const double expected = n / 8.0;
  const double tol = 5.0 * std::sqrt(n * (1.0 / 8.0) * (7.0 / 8.0));
  for (int count : octant) CHECK(std::abs(count - expected) <= tol);

  const auto replay = sample_surface_points(scene, 500, 77);
  const auto fresh = sample_surface_points(scene, 500, 78);
  for (std::size_t i = 0; i < replay.size(); ++i) CHECK(replay[i] == pts[i]);
  bool differs = false;
  for (std::size_t i = 0; i < fresh.size(); ++i) differs = differs || !(fresh[i] == replay[i]);
  CHECK(differs);
}

TEST_CASE("surface samples cover both solids of a two sphere scene") {
  SceneParams p;
  p.separation = 2.6;
  const auto scene = make_scene(SceneKind::kTwoSpheres, p, 4);
  const auto pts = sample_surface_points(scene, 4000, 9);
  std::size_t left = 0;
  for (const Vec3& q : pts) {
    const double d0 = std::abs((q - scene.solids[0].center).norm() - 1.0);
    const double d1 = std::abs((q - scene.solids[1].center).norm() - 1.0);
    CHECK(std::min(d0, d1) <= 1e-9);
    if (q.x < 0) ++left;
  }
  CHECK(left > pts.size() / 3);
  CHECK(pts.size() - left > pts.size() / 3);
}

TEST_CASE("surface samples stay on the pierced box boundary") {
  SceneParams p;
  p.hole_half_width = 0.4;
  const auto scene = make_scene(SceneKind::kBoxWithHole, p, 4);
  const auto pts = sample_surface_points(scene, 4000, 9);
  std::size_t on_walls = 0;
  for (const Vec3& q : pts) {
    const double ax = std::abs(q.x), ay = std::abs(q.y), az = std::abs(q.z);
    CHECK(ax <= 1.0 + 1e-12);
    CHECK(ay <= 1.0 + 1e-12);
    CHECK(az <= 1.0 + 1e-12);
    const bool outer = std::abs(ax - 1.0) <= 1e-12 || std::abs(ay - 1.0) <= 1e-12 ||
                       std::abs(az - 1.0) <= 1e-12;
    const bool wall = (std::abs(ax - 0.4) <= 1e-12 && ay <= 0.4) ||
                      (std::abs(ay - 0.4) <= 1e-12 && ax <= 0.4);
    CHECK((outer || wall));
    if (std::abs(az - 1.0) <= 1e-12) {
      CHECK(!(ax < 0.4 && ay < 0.4));  // nothing inside the openings
    }
    if (wall && !outer) ++on_walls;
  }
  CHECK(on_walls > 0);
}

TEST_CASE("cap removal drops the requested spherical cap") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 31);
  CapRemoval cap;
  cap.axis = {0, 0, 1};
  cap.angle = M_PI / 3.0;
  const std::size_t n = 40000;
  const auto pts = sample_surface_points(scene, n, 55, &cap);
  CHECK(pts.size() < n);
  for (const Vec3& q : pts) CHECK(q.z < 0.5 * q.norm() + 1e-12);
  // the cap holds a (1 - cos angle) / 2 fraction of the sphere's area
  const double kept = double(pts.size()) / double(n);
  CHECK(std::abs(kept - 0.75) < 0.02);
}

TEST_CASE("coverage has exact closed forms at the extremes") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 12);
  CHECK(coverage({{0, 0, 0}}, scene, 1.01) == 1.0);
  CHECK(coverage({{100, 100, 100}}, scene, 0.5) == 0.0);
  CHECK(coverage({}, scene, 0.5) == 0.0);
  CHECK_THROWS_AS(coverage({{0, 0, 0}}, scene, 0.0), std::invalid_argument);
}

TEST_CASE("coverage sees the hole left by a removed cap") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 12);
  const auto full = sample_surface_points(scene, 60000, 200);
  CHECK(coverage(full, scene, 0.02) >= 0.995);

  CapRemoval cap;
  cap.angle = 1.0;
  const auto holed = sample_surface_points(scene, 60000, 200, &cap);
  const double measured = coverage(holed, scene, 0.02);
  const double expected = 0.5 * (1.0 + std::cos(cap.angle));
  CHECK(measured >= expected - 0.015);
  CHECK(measured <= expected + 0.03);
}

TEST_CASE("datasets place cameras on a ring that sees the scene") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 7);
  DatasetOptions opt;
  opt.oracle_samples = 128;
  opt.depth_planes = 8;
  const auto ds = make_dataset(scene, 6, 2, 48, 48, 11, opt);
  REQUIRE(ds.views.size() == 8);
  CHECK(ds.train_views().size() == 6);
  CHECK(ds.test_views().size() == 2);
  const Vec3 center = (scene.bbox_min + scene.bbox_max) * 0.5;
  const double radius = ((scene.bbox_max - scene.bbox_min) * 0.5).norm();
  for (const auto& view : ds.views) {
    CHECK(view.image.width == 48);
    CHECK(view.image.height == 48);
    CHECK(std::abs((view.camera.center() - center).norm() - 3.0 * radius) <= 1e-9);
    CHECK(std::abs(view.camera.to_camera(center).z - 3.0 * radius) <= 1e-9);
    // the central ray pierces the solid, so that pixel is not background
    CHECK(view.image.get(24, 24).norm() > 0.1);
  }
  for (int i = 0; i < 8; ++i) {
    CHECK(ds.views[std::size_t(i)].view_id == i);
    CHECK(ds.views[std::size_t(i)].is_test == (i >= 6));
  }
  CHECK_THROWS_AS(make_dataset(scene, 0, 2, 48, 48, 11, opt), std::invalid_argument);
  DatasetOptions bad = opt;
  bad.depth_planes = 1;
  CHECK_THROWS_AS(make_dataset(scene, 2, 0, 48, 48, 11, bad), std::invalid_argument);
}

TEST_CASE("depth maps reproject onto the scene surface") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 7);
  DatasetOptions opt;
  opt.oracle_samples = 32;
  opt.depth_planes = 0;
  const auto ds = make_dataset(scene, 3, 0, 48, 48, 1, opt);
  std::size_t checked = 0;
  for (const auto& view : ds.views) {
    REQUIRE(view.has_depth);
    for (int py = 0; py < 48; ++py) {
      for (int px = 0; px < 48; ++px) {
        const double d = view.depth.data[std::size_t(py) * 48 + px];
        if (d <= 0.0) continue;
        const CameraModel& cam = view.camera;
        const Vec3 dir_cam{(px + 0.5 - cam.cx()) / cam.fx(), (py + 0.5 - cam.cy()) / cam.fy(), 1.0};
        const Vec3 world = cam.to_world(dir_cam * d);
        CHECK(std::abs(world.norm() - 1.0) <= 1e-9);
        ++checked;
      }
    }
  }
  CHECK(checked > 900);
}

TEST_CASE("depth survives the float file format") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 7);
  DatasetOptions opt;
  opt.oracle_samples = 32;
  opt.depth_planes = 0;
  const auto ds = make_dataset(scene, 1, 0, 48, 48, 1, opt);
  const auto dir = temp_dir("depth_rt");
  write_pfm(dir / "d.pfm", ds.views[0].depth);
  const auto loaded = read_pfm(dir / "d.pfm");
  REQUIRE(loaded.data.size() == ds.views[0].depth.data.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < loaded.data.size(); ++i) {
    const double orig = ds.views[0].depth.data[i];
    CHECK(loaded.data[i] == double(float(orig)));
    if (orig > 0.0) ++hits;
  }
  CHECK(hits > 200);
  // reprojection still lands near the surface at float precision
  const CameraModel& cam = ds.views[0].camera;
  for (int py = 0; py < 48; ++py) {
    for (int px = 0; px < 48; ++px) {
      const double d = loaded.data[std::size_t(py) * 48 + px];
      if (d <= 0.0) continue;
      const Vec3 dir_cam{(px + 0.5 - cam.cx()) / cam.fx(), (py + 0.5 - cam.cy()) / cam.fy(), 1.0};
      const Vec3 world = cam.to_world(dir_cam * d);
      CHECK(std::abs(world.norm() - 1.0) <= 1e-4);
    }
  }
}

TEST_CASE("depth likelihood volumes peak at the observed surface") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 7);
  DatasetOptions opt;
  opt.oracle_samples = 32;
  opt.depth_planes = 12;
  const auto ds = make_dataset(scene, 1, 0, 48, 48, 1, opt);
  const auto& view = ds.views[0];
  REQUIRE(view.probvol.plane_count() == 12);
  REQUIRE(view.probvol.width == 48);
  const auto& depths = view.probvol.plane_depths;
  for (int p = 1; p < 12; ++p) CHECK(depths[std::size_t(p)] > depths[std::size_t(p - 1)]);
  const double spacing = depths[1] - depths[0];
  std::size_t nonzero = 0;
  for (int py = 0; py < 48; ++py) {
    for (int px = 0; px < 48; ++px) {
      const double d = view.depth.data[std::size_t(py) * 48 + px];
      for (int p = 0; p < 12; ++p) {
        const double v = view.probvol.at(px, py, p);
        if (d <= 0.0) {
          CHECK(v == 0.0);
          continue;
        }
        const double dz = depths[std::size_t(p)] - d;
        const double expected = std::exp(-dz * dz / (2.0 * spacing * spacing));
        CHECK(std::abs(v - expected) <= 1e-12);
        if (v > 0.0) ++nonzero;
      }
    }
  }
  CHECK(nonzero > 1000);
}

TEST_CASE("identical seeds rebuild bit-identical datasets") {
  const auto scene = make_scene(SceneKind::kTwoSpheres, SceneParams{}, 19);
  DatasetOptions opt;
  opt.oracle_samples = 64;
  opt.depth_planes = 6;
  opt.background = {0.1, 0.2, 0.3};
  const auto a = make_dataset(scene, 3, 1, 32, 32, 5, opt);
  const auto b = make_dataset(scene, 3, 1, 32, 32, 5, opt);
  REQUIRE(a.views.size() == b.views.size());
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    CHECK(a.views[i].camera.rotation() == b.views[i].camera.rotation());
    CHECK(a.views[i].camera.translation() == b.views[i].camera.translation());
    CHECK(a.views[i].image.data == b.views[i].image.data);
    CHECK(a.views[i].depth.data == b.views[i].depth.data);
    CHECK(a.views[i].probvol.values == b.views[i].probvol.values);
    CHECK(a.views[i].probvol.plane_depths == b.views[i].probvol.plane_depths);
  }
  const auto c = make_dataset(scene, 3, 1, 32, 32, 6, opt);
  CHECK(!(c.views[0].camera.translation() == a.views[0].camera.translation()));
}

TEST_CASE("datasets round trip through the directory layout") {
  SceneParams p;
  p.separation = 2.8;
  p.density = 6.0;
  const auto scene = make_scene(SceneKind::kTwoSpheres, p, 23);
  DatasetOptions opt;
  opt.oracle_samples = 64;
  opt.depth_planes = 5;
  opt.background = {0.05, 0.05, 0.1};
  const auto ds = make_dataset(scene, 3, 2, 32, 32, 13, opt);
  const auto dir = temp_dir("roundtrip");
  save_dataset(ds, dir);

  CHECK(std::filesystem::exists(dir / "cameras.txt"));
  CHECK(std::filesystem::exists(dir / "scene.txt"));
  CHECK(std::filesystem::exists(dir / "train" / "0000.ppm"));
  CHECK(std::filesystem::exists(dir / "train" / "0002.ppm"));
  CHECK(std::filesystem::exists(dir / "test" / "0003.ppm"));
  CHECK(std::filesystem::exists(dir / "depth" / "0004.pfm"));
  CHECK(std::filesystem::exists(dir / "probvol" / "0000.bin"));

  const auto loaded = load_dataset(dir);
  CHECK(loaded.scene.kind == scene.kind);
  CHECK(loaded.scene.seed == scene.seed);
  CHECK(loaded.scene.params.separation == p.separation);
  CHECK(loaded.scene.solids[0].color_base == scene.solids[0].color_base);
  CHECK(loaded.background == ds.background);
  REQUIRE(loaded.views.size() == ds.views.size());
  for (std::size_t i = 0; i < ds.views.size(); ++i) {
    const auto& orig = ds.views[i];
    const auto& back = loaded.views[i];
    CHECK(back.view_id == orig.view_id);
    CHECK(back.is_test == orig.is_test);
    CHECK(back.camera.rotation() == orig.camera.rotation());
    CHECK(back.camera.translation() == orig.camera.translation());
    CHECK(back.camera.fx() == orig.camera.fx());
    REQUIRE(back.image.data.size() == orig.image.data.size());
    for (std::size_t k = 0; k < orig.image.data.size(); ++k) {
      CHECK(std::abs(back.image.data[k] - orig.image.data[k]) <= 0.5 / 255.0 + 1e-12);
    }
    REQUIRE(back.has_depth);
    for (std::size_t k = 0; k < orig.depth.data.size(); ++k) {
      CHECK(back.depth.data[k] == double(float(orig.depth.data[k])));
    }
    REQUIRE(back.probvol.plane_count() == orig.probvol.plane_count());
    for (int pl = 0; pl < orig.probvol.plane_count(); ++pl) {
      CHECK(back.probvol.plane_depths[std::size_t(pl)] ==
            orig.probvol.plane_depths[std::size_t(pl)]);
    }
    for (std::size_t k = 0; k < orig.probvol.values.size(); ++k) {
      CHECK(std::abs(back.probvol.values[k] - orig.probvol.values[k]) <= 1e-7);
    }
  }
}

TEST_CASE("datasets without depth skip the aux directories") {
  const auto scene = make_scene(SceneKind::kSphere, SceneParams{}, 7);
  DatasetOptions opt;
  opt.oracle_samples = 16;
  opt.with_depth = false;
  const auto ds = make_dataset(scene, 2, 0, 16, 16, 1, opt);
  CHECK_FALSE(ds.views[0].has_depth);
  CHECK(ds.views[0].probvol.plane_count() == 0);
  const auto dir = temp_dir("nodepth");
  save_dataset(ds, dir);
  CHECK_FALSE(std::filesystem::exists(dir / "depth"));
  CHECK_FALSE(std::filesystem::exists(dir / "probvol"));
  const auto loaded = load_dataset(dir);
  CHECK_FALSE(loaded.views[0].has_depth);
}

TEST_CASE("grayscale float images round trip at float precision") {
  GrayBuffer g(3, 2);
  g.data = {0.0, 1.0, 0.25, 1e-3, 3.7, 123456.78125};
  const auto dir = temp_dir("pfm");
  write_pfm(dir / "g.pfm", g);
  const auto back = read_pfm(dir / "g.pfm");
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  for (std::size_t i = 0; i < g.data.size(); ++i) CHECK(back.data[i] == double(float(g.data[i])));

  CHECK_THROWS_AS(write_pfm(dir / "empty.pfm", GrayBuffer{}), std::invalid_argument);
  std::ofstream(dir / "junk.pfm") << "not a float map";
  CHECK_THROWS_AS(read_pfm(dir / "junk.pfm"), std::runtime_error);
  CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), std::runtime_error);
}

TEST_CASE("probability volumes round trip through their container") {
  ProbabilityVolume vol;
  vol.width = 2;
  vol.height = 2;
  vol.plane_depths = {1.25, 2.0, 3.5};
  vol.values.assign(12, 0.0);
  for (std::size_t i = 0; i < vol.values.size(); ++i) vol.values[i] = double(i) / 11.0;
  const auto dir = temp_dir("probvol");
  write_probvol(dir / "v.bin", vol);
  const auto back = read_probvol(dir / "v.bin");
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  REQUIRE(back.plane_depths.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.plane_depths[i] == vol.plane_depths[i]);
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    CHECK(back.values[i] == double(float(vol.values[i])));
  }

  ProbabilityVolume bad = vol;
  bad.plane_depths = {2.0, 1.0, 3.0};
  CHECK_THROWS_AS(write_probvol(dir / "bad.bin", bad), std::invalid_argument);
  CHECK_THROWS_AS(read_probvol(dir / "missing.bin"), std::runtime_error);
}

TEST_SUITE_END();
