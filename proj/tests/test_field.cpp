#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fd_util.hpp"
#include "pnrf/field.hpp"

using namespace pnrf;
using pnrf_test::central_diff;
using pnrf_test::rel_err;

namespace {

FieldConfig small_config() {
  FieldConfig cfg;
  cfg.feature_dim = 4;
  cfg.processed_dim = 6;
  cfg.f_hidden = 6;
  cfg.t_hidden = 6;
  cfg.r_hidden = 6;
  cfg.position_bands = 2;
  cfg.direction_bands = 1;
  cfg.feature_bands = 0;
  return cfg;
}

CameraModel test_camera(const Vec3& translation = {0, 0, 0}) {
  return CameraModel(100.0, 100.0, 32.0, 32.0, 64, 64, {1, 0, 0, 0, 1, 0, 0, 0, 1}, translation);
}

NeuralPointCloud random_cloud(std::size_t n, int feature_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xy(-0.8, 0.8);
  std::uniform_real_distribution<double> z(2.0, 4.0);
  std::normal_distribution<double> feat(0.0, 0.5);
  std::uniform_real_distribution<double> logit(-1.0, 1.0);

  NeuralPointCloud cloud;
  cloud.feature_dim = feature_dim;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions.push_back({xy(rng), xy(rng), z(rng)});
    for (int d = 0; d < feature_dim; ++d) cloud.features.push_back(feat(rng));
    cloud.gamma_logits.push_back(logit(rng));
  }
  return cloud;
}

double softplus_inv(double y) { return std::log(std::exp(y) - 1.0); }

// T net that computes softplus(relu(first feature component)), so per-point
// densities can be dialed in exactly through the input.
void make_passthrough_t(RadianceFieldParams& params) {
  const MlpConfig cfg = params.config.t_config();
  for (const std::string& name : params.t_net.names()) params.t_net.value(name).fill(0.0);
  params.t_net.value("W0").at(0, 0) = 1.0;
  params.t_net.value("W1").at(0, 0) = 1.0;
  CHECK(cfg.output == Activation::kSoftplus);
}

Tensor feature_with_first(double v, std::size_t width) {
  Tensor t = Tensor::zeros({width});
  t.values[0] = v;
  return t;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("config widths and validation") {
    FieldConfig cfg;
    CHECK(cfg.f_input_width() == 39 + 59);
    CHECK(cfg.r_input_width() == 128 + 27);
    CHECK(cfg.f_config().widths == std::vector<int>{98, 256, 128});
    CHECK(cfg.t_config().widths == std::vector<int>{128, 256, 1});
    CHECK(cfg.r_config().widths == std::vector<int>{155, 128, 128, 3});
    CHECK(cfg.t_config().output == Activation::kSoftplus);
    CHECK(cfg.r_config().output == Activation::kSigmoid);

    FieldConfig bad = cfg;
    bad.feature_dim = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.min_distance = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.position_bands = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("inverse distance weights normalize and clamp") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(1e-4, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> dists(1 + trial % 7);
      for (double& d : dists) d = dist(rng);
      const std::vector<double> w = inverse_distance_weights(dists, 1e-6);
      double sum = 0.0;
      for (double v : w) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }

    // a zero distance is clamped, not divided through
    const std::vector<double> w = inverse_distance_weights({0.0, 1.0}, 1e-6);
    CHECK(std::isfinite(w[0]));
    CHECK(w[0] == doctest::Approx(1e6 / (1e6 + 1.0)).epsilon(1e-12));
  }

  TEST_CASE("aggregation closed forms") {
    const double eps = 1e-6;

    // single neighbor: weight normalizes to 1, confidence scales
    std::vector<Tensor> one{Tensor::from_vector({1.0, 2.0})};
    Tensor f = aggregate_feature(one, {0.8}, {0.5}, eps);
    CHECK(f.values[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(f.values[1] == doctest::Approx(1.6).epsilon(1e-15));

    // two equidistant unit-confidence neighbors average
    std::vector<Tensor> two{Tensor::from_vector({1.0, 0.0}), Tensor::from_vector({0.0, 1.0})};
    f = aggregate_feature(two, {1.0, 1.0}, {0.3, 0.3}, eps);
    CHECK(f.values[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.values[1] == doctest::Approx(0.5).epsilon(1e-15));

    // distances 1 and 2 give weights 2/3 and 1/3
    std::vector<Tensor> scalars{Tensor::from_vector({1.0}), Tensor::from_vector({4.0})};
    f = aggregate_feature(scalars, {1.0, 1.0}, {1.0, 2.0}, eps);
    CHECK(f.values[0] == doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(aggregate_feature(two, {1.0}, {0.3, 0.3}, eps), std::invalid_argument);
    CHECK(aggregate_feature({}, {}, {}, eps).size() == 0);
  }

  TEST_CASE("density closed forms") {
    RadianceFieldParams params = RadianceFieldParams::create(small_config(), 11);
    make_passthrough_t(params);
    const std::size_t c2 = std::size_t(params.config.processed_dim);

    // single neighbor with post-activation density 2 and confidence 0.5
    std::vector<Tensor> one{feature_with_first(softplus_inv(2.0), c2)};
    DensityResult d = density_at(params, one, {0.5}, {0.7});
    CHECK(d.per_point[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d.sigma == doctest::Approx(1.0).epsilon(1e-12));

    // two equidistant neighbors with densities 1 and 3 average to 2
    std::vector<Tensor> two{feature_with_first(softplus_inv(1.0), c2),
                            feature_with_first(softplus_inv(3.0), c2)};
    d = density_at(params, two, {1.0, 1.0}, {0.4, 0.4});
    CHECK(d.sigma == doctest::Approx(2.0).epsilon(1e-12));

    // vanishing confidence gates the density off
    d = density_at(params, two, {1e-18, 1e-18}, {0.4, 0.4});
    CHECK(d.sigma <= 1e-15);
    CHECK(d.sigma >= 0.0);

    CHECK(density_at(params, {}, {}, {}).sigma == 0.0);
    CHECK_THROWS_AS(density_at(params, two, {1.0}, {0.4, 0.4}), std::invalid_argument);
  }

  TEST_CASE("radiance head closed forms") {
    RadianceFieldParams params = RadianceFieldParams::create(small_config(), 13);
    const std::size_t c2 = std::size_t(params.config.processed_dim);

    SUBCASE("zero weights leave sigmoid of the output bias") {
      for (const std::string& name : params.r_net.names()) params.r_net.value(name).fill(0.0);
      Tensor& bias = params.r_net.value("b2");
      bias.values = {0.3, -0.2, 1.0};
      const Vec3 rgb = radiance_at(params, Tensor::zeros({c2}), Vec3{0, 0, 1});
      CHECK(rgb.x == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-14));
      CHECK(rgb.y == doctest::Approx(1.0 / (1.0 + std::exp(0.2))).epsilon(1e-14));
      CHECK(rgb.z == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    }

    SUBCASE("view dependence and range") {
      Tensor fx = Tensor::zeros({c2});
      for (std::size_t i = 0; i < c2; ++i) fx.values[i] = 0.1 * double(i + 1);
      const Vec3 a = radiance_at(params, fx, Vec3{0, 0, 1});
      const Vec3 b = radiance_at(params, fx, Vec3{1, 0, 0});
      CHECK(std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z) > 1e-9);
      for (const Vec3& v : {a, b}) {
        for (double c : {v.x, v.y, v.z}) {
          CHECK(c > 0.0);
          CHECK(c < 1.0);
        }
      }
    }
  }

  TEST_CASE("per-point feature") {
    RadianceFieldParams params = RadianceFieldParams::create(small_config(), 17);
    const FieldConfig& cfg = params.config;
    const std::vector<double> feat{0.3, -0.2, 0.5, 0.1};

    SUBCASE("zero weights leave the output bias") {
      for (const std::string& name : params.f_net.names()) params.f_net.value(name).fill(0.0);
      Tensor& bias = params.f_net.value("b1");
      for (std::size_t i = 0; i < bias.size(); ++i) bias.values[i] = 0.25 * double(i);
      const Tensor out = per_point_feature(params, feat, Vec3{0.4, -0.1, 0.2});
      REQUIRE(out.size() == bias.size());
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.values[i] == bias.values[i]);
    }

    SUBCASE("depends only on the offset, bit for bit") {
      // dyadic coordinates keep the shifted subtraction exact
      const Vec3 x{0.25, -0.5, 1.5};
      const Vec3 p{0.125, 0.25, 2.0};
      const Vec3 offset{4.0, -8.0, 16.0};
      const Tensor a = per_point_feature(params, feat, x - p);
      const Tensor b = per_point_feature(params, feat, (x + offset) - (p + offset));
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == b.values[i]);
    }

    SUBCASE("matches the encode + forward composition") {
      const Vec3 rel{0.4, -0.7, 0.05};
      const Tensor enc = positional_encode(Tensor::from_vector({rel.x, rel.y, rel.z}),
                                           cfg.position_bands);
      Tensor in = Tensor::zeros({std::size_t(cfg.f_input_width())});
      std::copy(enc.values.begin(), enc.values.end(), in.values.begin());
      std::copy(feat.begin(), feat.end(), in.values.begin() + enc.size());
      const Tensor expected = mlp_forward(cfg.f_config(), params.f_net, in);
      const Tensor got = per_point_feature(params, feat, rel);
      REQUIRE(got.size() == expected.size());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.values[i] == expected.values[i]);
    }

    SUBCASE("width mismatch throws") {
      const std::vector<double> wrong{1.0, 2.0};
      CHECK_THROWS_AS(per_point_feature(params, wrong, Vec3{0, 0, 0}), std::invalid_argument);
    }
  }

  TEST_CASE("evaluate equals the unfused sequence") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 23);
    NeuralPointCloud cloud = random_cloud(200, cfg.feature_dim, 23);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    qcfg.k = 6;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> xy(-0.7, 0.7);
    std::uniform_real_distribution<double> zz(2.1, 3.9);
    int nonempty = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const Vec3 x{xy(rng), xy(rng), zz(rng)};
      Vec3 dir{xy(rng), xy(rng), 1.0};
      dir = dir.normalized();
      const ShadingResult got = evaluate(params, cloud, grid, x, dir, qcfg);

      const NeighborSet neighbors = query_neighbors(grid, cloud, x, qcfg);
      REQUIRE(got.neighbors.indices == neighbors.indices);
      if (neighbors.indices.empty()) {
        CHECK(got.sigma == 0.0);
        CHECK(got.radiance == Vec3{0.0, 0.0, 0.0});
        continue;
      }
      ++nonempty;

      std::vector<Tensor> per_point;
      std::vector<double> gammas;
      for (std::uint32_t pt : neighbors.indices) {
        per_point.push_back(per_point_feature(
            params, std::span<const double>(cloud.feature_row(pt), std::size_t(cfg.feature_dim)),
            x - cloud.positions[pt]));
        gammas.push_back(cloud.gamma(pt));
      }
      const Tensor fx =
          aggregate_feature(per_point, gammas, neighbors.distances, cfg.min_distance);
      const DensityResult density = density_at(params, per_point, gammas, neighbors.distances);
      const Vec3 rgb = radiance_at(params, fx, dir);

      CHECK(got.sigma == density.sigma);
      CHECK(got.radiance == rgb);
      REQUIRE(got.per_point_sigma.size() == density.per_point.size());
      for (std::size_t i = 0; i < density.per_point.size(); ++i) {
        CHECK(got.per_point_sigma[i] == density.per_point[i]);
      }

      // invariants: non-negative density, open-interval radiance, unit weights
      CHECK(got.sigma >= 0.0);
      for (double c : {rgb.x, rgb.y, rgb.z}) {
        CHECK(c > 0.0);
        CHECK(c < 1.0);
      }
      double wsum = 0.0;
      for (double w : got.weights) wsum += w;
      CHECK(std::abs(wsum - 1.0) <= 1e-12);
    }
    CHECK(nonempty >= 20);

    SUBCASE("far query point sees empty space") {
      const ShadingResult far = evaluate(params, cloud, grid, Vec3{0, 0, 50.0}, Vec3{0, 0, 1}, qcfg);
      CHECK(far.neighbors.size() == 0);
      CHECK(far.sigma == 0.0);
      CHECK(far.radiance == Vec3{0.0, 0.0, 0.0});
    }
  }

  TEST_CASE("density is monotone in each confidence") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 31);
    NeuralPointCloud cloud = random_cloud(150, cfg.feature_dim, 31);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> xy(-0.6, 0.6);
    std::uniform_real_distribution<double> zz(2.2, 3.8);
    int tested = 0;
    while (tested < 10) {
      const Vec3 x{xy(rng), xy(rng), zz(rng)};
      const NeighborSet neighbors = query_neighbors(grid, cloud, x, qcfg);
      if (neighbors.indices.empty()) continue;
      ++tested;
      const double before = evaluate(params, cloud, grid, x, Vec3{0, 0, 1}, qcfg).sigma;
      const std::uint32_t pt = neighbors.indices[tested % neighbors.indices.size()];
      const double saved = cloud.gamma_logits[pt];
      cloud.gamma_logits[pt] = saved + 0.5;
      const double after = evaluate(params, cloud, grid, x, Vec3{0, 0, 1}, qcfg).sigma;
      cloud.gamma_logits[pt] = saved;
      CHECK(after >= before);
    }
  }

  TEST_CASE("evaluate is invariant under common translation") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 41);
    NeuralPointCloud cloud = random_cloud(150, cfg.feature_dim, 41);
    QueryConfig qcfg;
    const Vec3 offset{3.7, -12.1, 0.9};

    NeuralPointCloud shifted = cloud;
    for (Vec3& p : shifted.positions) p += offset;

    // identity rotation: moving the camera center by `offset` keeps every
    // camera-space coordinate of the shifted scene unchanged
    const CameraModel camera = test_camera();
    const CameraModel shifted_camera = test_camera(camera.translation() - offset);
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);
    const PerspectiveGrid shifted_grid = build_index(shifted, shifted_camera, qcfg);

    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> xy(-0.6, 0.6);
    std::uniform_real_distribution<double> zz(2.2, 3.8);
    int nonempty = 0;
    for (int trial = 0; trial < 25; ++trial) {
      const Vec3 x{xy(rng), xy(rng), zz(rng)};
      Vec3 dir{xy(rng), xy(rng), 1.0};
      dir = dir.normalized();
      const ShadingResult a = evaluate(params, cloud, grid, x, dir, qcfg);
      const ShadingResult b = evaluate(params, shifted, shifted_grid, x + offset, dir, qcfg);
      REQUIRE(a.neighbors.indices == b.neighbors.indices);
      if (a.neighbors.indices.empty()) continue;
      ++nonempty;
      CHECK(rel_err(a.sigma, b.sigma) <= 1e-12);
      CHECK(rel_err(a.radiance.x, b.radiance.x) <= 1e-12);
      CHECK(rel_err(a.radiance.y, b.radiance.y) <= 1e-12);
      CHECK(rel_err(a.radiance.z, b.radiance.z) <= 1e-12);
    }
    CHECK(nonempty >= 10);
  }

  TEST_CASE("batched evaluation matches the reference path") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 47);
    NeuralPointCloud cloud = random_cloud(180, cfg.feature_dim, 47);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    qcfg.k = 5;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> xy(-0.7, 0.7);
    std::uniform_real_distribution<double> zz(2.1, 3.9);
    std::vector<FieldSample> samples;
    for (int i = 0; i < 30; ++i) {
      FieldSample s;
      s.x = Vec3{xy(rng), xy(rng), zz(rng)};
      s.dir = Vec3{xy(rng), xy(rng), 1.0}.normalized();
      s.neighbors = query_neighbors(grid, cloud, s.x, qcfg);
      samples.push_back(std::move(s));
    }
    // guarantee at least one empty sample
    FieldSample far;
    far.x = Vec3{0, 0, 90.0};
    far.dir = Vec3{0, 0, 1};
    far.neighbors = query_neighbors(grid, cloud, far.x, qcfg);
    REQUIRE(far.neighbors.size() == 0);
    samples.push_back(std::move(far));

    const FieldBatch plain = field_forward(params, cloud, samples, false);
    const FieldBatch recorded = field_forward(params, cloud, samples, true);
    REQUIRE(plain.sigma.size() == samples.size());
    int nonempty = 0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      CHECK(plain.sigma[j] == recorded.sigma[j]);
      CHECK(plain.radiance[j] == recorded.radiance[j]);

      const ShadingResult ref =
          evaluate(params, cloud, grid, samples[j].x, samples[j].dir, qcfg);
      if (!samples[j].neighbors.indices.empty()) ++nonempty;
      CHECK(rel_err(plain.sigma[j], ref.sigma) <= 1e-12);
      CHECK(rel_err(plain.radiance[j].x, ref.radiance.x) <= 1e-12);
      CHECK(rel_err(plain.radiance[j].y, ref.radiance.y) <= 1e-12);
      CHECK(rel_err(plain.radiance[j].z, ref.radiance.z) <= 1e-12);
    }
    CHECK(nonempty >= 15);
  }

  TEST_CASE("analytic gradients match finite differences") {
    FieldConfig cfg = small_config();
    SUBCASE("raw features") {}
    SUBCASE("encoded features") {
      cfg.feature_dim = 3;
      cfg.feature_bands = 1;
    }

    RadianceFieldParams params = RadianceFieldParams::create(cfg, 59);
    NeuralPointCloud cloud = random_cloud(14, cfg.feature_dim, 59);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    qcfg.k = 3;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> xy(-0.6, 0.6);
    std::uniform_real_distribution<double> zz(2.2, 3.8);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);

    std::vector<FieldSample> samples;
    while (samples.size() < 5) {
      FieldSample s;
      s.x = Vec3{xy(rng), xy(rng), zz(rng)};
      s.dir = Vec3{xy(rng), xy(rng), 1.0}.normalized();
      s.neighbors = query_neighbors(grid, cloud, s.x, qcfg);
      if (s.neighbors.indices.empty()) continue;
      samples.push_back(std::move(s));
    }
    FieldSample far;
    far.x = Vec3{0, 0, 80.0};
    far.dir = Vec3{0, 0, 1};
    samples.push_back(std::move(far));

    std::vector<double> dsigma(samples.size());
    std::vector<Vec3> dradiance(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      dsigma[j] = coef(rng);
      dradiance[j] = Vec3{coef(rng), coef(rng), coef(rng)};
    }

    const auto loss = [&]() {
      const FieldBatch b = field_forward(params, cloud, samples, false);
      double total = 0.0;
      for (std::size_t j = 0; j < samples.size(); ++j) {
        total += dsigma[j] * b.sigma[j] + dradiance[j].dot(b.radiance[j]);
      }
      return total;
    };

    const FieldBatch batch = field_forward(params, cloud, samples, true);
    RadianceFieldGrads grads = RadianceFieldGrads::zeros_like(params, cloud);
    field_backward(params, cloud, samples, batch, dsigma, dradiance, grads);

    int checked = 0;
    const auto check_store = [&](ParameterStore& values, const ParameterStore& analytic) {
      for (std::size_t t = 0; t < values.tensor_count(); ++t) {
        Tensor& tensor = values.value_at(t);
        const Tensor& g = analytic.grad_at(t);
        for (std::size_t i = 0; i < tensor.size(); ++i) {
          const double fd = central_diff(loss, &tensor.values[i]);
          CHECK_MESSAGE(rel_err(fd, g.values[i], 1e-5) < 1e-4,
                        "tensor ", values.names()[t], " entry ", i, " fd=", fd,
                        " analytic=", g.values[i]);
          ++checked;
        }
      }
    };
    check_store(params.f_net, grads.f_net);
    check_store(params.t_net, grads.t_net);
    check_store(params.r_net, grads.r_net);

    for (std::size_t i = 0; i < cloud.features.size(); ++i) {
      const double fd = central_diff(loss, &cloud.features[i]);
      CHECK_MESSAGE(rel_err(fd, grads.features[i], 1e-5) < 1e-4, "feature entry ", i);
      ++checked;
    }
    for (std::size_t i = 0; i < cloud.gamma_logits.size(); ++i) {
      const double fd = central_diff(loss, &cloud.gamma_logits[i]);
      CHECK_MESSAGE(rel_err(fd, grads.gamma_logits[i], 1e-5) < 1e-4, "logit entry ", i);
      ++checked;
    }
    CHECK(checked > 400);
  }

  TEST_CASE("split batches accumulate to the full gradient") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 67);
    NeuralPointCloud cloud = random_cloud(60, cfg.feature_dim, 67);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    qcfg.k = 4;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> xy(-0.6, 0.6);
    std::uniform_real_distribution<double> zz(2.2, 3.8);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<FieldSample> samples;
    for (int i = 0; i < 12; ++i) {
      FieldSample s;
      s.x = Vec3{xy(rng), xy(rng), zz(rng)};
      s.dir = Vec3{xy(rng), xy(rng), 1.0}.normalized();
      s.neighbors = query_neighbors(grid, cloud, s.x, qcfg);
      samples.push_back(std::move(s));
    }
    std::vector<double> dsigma(samples.size());
    std::vector<Vec3> dradiance(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      dsigma[j] = coef(rng);
      dradiance[j] = Vec3{coef(rng), coef(rng), coef(rng)};
    }

    const FieldBatch full_batch = field_forward(params, cloud, samples, true);
    RadianceFieldGrads full = RadianceFieldGrads::zeros_like(params, cloud);
    field_backward(params, cloud, samples, full_batch, dsigma, dradiance, full);

    RadianceFieldGrads merged = RadianceFieldGrads::zeros_like(params, cloud);
    for (std::size_t half = 0; half < 2; ++half) {
      const std::size_t begin = half * 6, end = begin + 6;
      const std::vector<FieldSample> part(samples.begin() + begin, samples.begin() + end);
      const std::vector<double> ds(dsigma.begin() + begin, dsigma.begin() + end);
      const std::vector<Vec3> dr(dradiance.begin() + begin, dradiance.begin() + end);
      const FieldBatch b = field_forward(params, cloud, part, true);
      RadianceFieldGrads g = RadianceFieldGrads::zeros_like(params, cloud);
      field_backward(params, cloud, part, b, ds, dr, g);
      merged.accumulate_from(g);
    }

    const auto compare_store = [&](const ParameterStore& a, const ParameterStore& b) {
      for (std::size_t t = 0; t < a.tensor_count(); ++t) {
        const Tensor& ga = a.grad_at(t);
        const Tensor& gb = b.grad_at(t);
        for (std::size_t i = 0; i < ga.size(); ++i) {
          CHECK(rel_err(ga.values[i], gb.values[i], 1.0) <= 1e-12);
        }
      }
    };
    compare_store(full.f_net, merged.f_net);
    compare_store(full.t_net, merged.t_net);
    compare_store(full.r_net, merged.r_net);
    for (std::size_t i = 0; i < full.features.size(); ++i) {
      CHECK(rel_err(full.features[i], merged.features[i], 1.0) <= 1e-12);
    }
    for (std::size_t i = 0; i < full.gamma_logits.size(); ++i) {
      CHECK(rel_err(full.gamma_logits[i], merged.gamma_logits[i], 1.0) <= 1e-12);
    }

    SUBCASE("zero clears the accumulator") {
      merged.zero();
      for (double v : merged.features) CHECK(v == 0.0);
      for (double v : merged.gamma_logits) CHECK(v == 0.0);
      for (std::size_t t = 0; t < merged.f_net.tensor_count(); ++t) {
        for (double v : merged.f_net.grad_at(t).values) CHECK(v == 0.0);
      }
    }
  }

  TEST_CASE("backward validates its inputs") {
    const FieldConfig cfg = small_config();
    RadianceFieldParams params = RadianceFieldParams::create(cfg, 73);
    NeuralPointCloud cloud = random_cloud(20, cfg.feature_dim, 73);
    const CameraModel camera = test_camera();
    QueryConfig qcfg;
    const PerspectiveGrid grid = build_index(cloud, camera, qcfg);

    std::vector<FieldSample> samples(1);
    samples[0].x = Vec3{0, 0, 3.0};
    samples[0].dir = Vec3{0, 0, 1};
    samples[0].neighbors = query_neighbors(grid, cloud, samples[0].x, qcfg);

    RadianceFieldGrads grads = RadianceFieldGrads::zeros_like(params, cloud);
    const FieldBatch plain = field_forward(params, cloud, samples, false);
    CHECK_THROWS_AS(
        field_backward(params, cloud, samples, plain, {1.0}, {Vec3{0, 0, 0}}, grads),
        std::logic_error);

    const FieldBatch recorded = field_forward(params, cloud, samples, true);
    CHECK_THROWS_AS(
        field_backward(params, cloud, samples, recorded, {1.0, 2.0},
                       {Vec3{0, 0, 0}, Vec3{0, 0, 0}}, grads),
        std::invalid_argument);
  }
}
