#include "pnrf/renderer.hpp"

#include <cmath>
#include <stdexcept>

#include "pnrf/parallel.hpp"

namespace pnrf {
namespace {

constexpr double kAlphaCeiling = 1.0 - 1e-10;

}  // namespace

CompositeResult composite_ray(const std::vector<double>& sigma, const std::vector<Vec3>& radiance,
                              const std::vector<double>& delta, const Vec3& background) {
  const std::size_t m = sigma.size();
  if (radiance.size() != m || delta.size() != m) {
    throw std::invalid_argument("composite_ray: sigma, radiance, delta sizes disagree");
  }
  CompositeResult out;
  out.alpha.resize(m);
  out.tau.resize(m);
  double tau = 1.0;
  Vec3 acc{0, 0, 0};
  for (std::size_t j = 0; j < m; ++j) {
    out.tau[j] = tau;
    double alpha = 0.0;
    if (sigma[j] > 0.0) {
      alpha = -std::expm1(-sigma[j] * delta[j]);
      if (alpha > kAlphaCeiling) alpha = kAlphaCeiling;
    }
    out.alpha[j] = alpha;
    acc += radiance[j] * (tau * alpha);
    tau *= 1.0 - alpha;
  }
  out.tau_end = tau;
  out.color = acc + background * tau;
  return out;
}

void composite_backward(const std::vector<double>& sigma, const std::vector<Vec3>& radiance,
                        const std::vector<double>& delta, const Vec3& background,
                        const CompositeResult& forward, const Vec3& dcolor,
                        std::vector<double>* dsigma, std::vector<Vec3>* dradiance) {
  const std::size_t m = sigma.size();
  if (radiance.size() != m || delta.size() != m || forward.alpha.size() != m ||
      forward.tau.size() != m) {
    throw std::invalid_argument("composite_backward: forward state does not match the inputs");
  }
  dsigma->assign(m, 0.0);
  dradiance->assign(m, Vec3{});
  // suffix = everything composited strictly after sample j, which carries a
  // (1 - alpha_j) factor from the running transmittance
  Vec3 suffix = background * forward.tau_end;
  for (std::size_t j = m; j-- > 0;) {
    const double weight = forward.tau[j] * forward.alpha[j];
    (*dradiance)[j] = dcolor * weight;
    const Vec3 dc_dalpha = radiance[j] * forward.tau[j] - suffix / (1.0 - forward.alpha[j]);
    double dalpha_dsigma = 0.0;
    if (sigma[j] > 0.0) {
      const double raw = -std::expm1(-sigma[j] * delta[j]);
      if (raw <= kAlphaCeiling) dalpha_dsigma = delta[j] * std::exp(-sigma[j] * delta[j]);
    }
    (*dsigma)[j] = dcolor.dot(dc_dalpha) * dalpha_dsigma;
    suffix += radiance[j] * weight;
  }
}

RayMarchState march_ray(const NeuralPointCloud& cloud, const PerspectiveGrid& grid,
                        const RadianceFieldParams& params, const Ray& ray,
                        const RenderOptions& opts, bool record) {
  ray.validate();
  RayMarchState state;
  state.background = opts.background;
  state.points = place_shading_points(ray, grid, opts.shading);
  const std::size_t m = state.points.size();
  state.samples.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    FieldSample sample;
    sample.x = ray.at(state.points.t[j]);
    sample.dir = ray.direction;
    sample.neighbors = query_neighbors(grid, cloud, sample.x, opts.query);
    state.samples.push_back(std::move(sample));
  }
  state.batch = field_forward(params, cloud, state.samples, record);
  state.recorded = record;

  CompositeResult comp =
      composite_ray(state.batch.sigma, state.batch.radiance, state.points.delta, opts.background);
  state.color = comp.color;
  state.tau_end = comp.tau_end;
  state.alpha = std::move(comp.alpha);
  state.tau = std::move(comp.tau);
  double depth = 0.0;
  for (std::size_t j = 0; j < m; ++j) depth += state.tau[j] * state.alpha[j] * state.points.t[j];
  state.expected_depth = depth;
  return state;
}

void backward_ray(const RadianceFieldParams& params, const NeuralPointCloud& cloud,
                  RayMarchState& state, const Vec3& dcolor, RadianceFieldGrads& grads) {
  if (!state.recorded) throw std::logic_error("backward_ray: march was not recorded");
  if (state.consumed) throw std::logic_error("backward_ray: state already consumed");
  CompositeResult forward;
  forward.color = state.color;
  forward.tau_end = state.tau_end;
  forward.alpha = state.alpha;
  forward.tau = state.tau;
  std::vector<double> dsigma;
  std::vector<Vec3> dradiance;
  composite_backward(state.batch.sigma, state.batch.radiance, state.points.delta,
                     state.background, forward, dcolor, &dsigma, &dradiance);
  field_backward(params, cloud, state.samples, state.batch, dsigma, dradiance, grads);
  state.consumed = true;
}

RenderResult render_image(const NeuralPointCloud& cloud, const PerspectiveGrid& grid,
                          const RadianceFieldParams& params, const CameraModel& camera,
                          const RenderOptions& opts) {
  RenderResult out;
  out.image = ImageBuffer(camera.width(), camera.height());
  if (opts.opacity_map) out.opacity = GrayBuffer(camera.width(), camera.height());
  if (opts.depth_map) out.depth = GrayBuffer(camera.width(), camera.height());
  const std::size_t total = out.image.pixel_count();
  parallel_chunks(total, 16, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int px = int(i % std::size_t(camera.width()));
      const int py = int(i / std::size_t(camera.width()));
      const Ray ray = generate_ray(camera, px, py);
      const RayMarchState st = march_ray(cloud, grid, params, ray, opts, false);
      out.image.set(px, py, st.color);
      if (opts.opacity_map) out.opacity.data[i] = st.opacity();
      if (opts.depth_map) out.depth.data[i] = st.expected_depth;
    }
  });
  return out;
}

}  // namespace pnrf
