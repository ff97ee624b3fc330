#include "stegosplat/splat/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stegosplat/core/error.hpp"
#include "stegosplat/splat/geometry.hpp"

namespace stegosplat::splat {
namespace {

struct Entry {
  std::size_t index;
  Projection proj;
  int x0, x1, y0, y1;  // inclusive pixel bounds
};

// Projected splats in compositing order. Pixel bounds enclose every pixel
// where alpha * G can reach alpha_skip; outside them the splat would be
// skipped anyway.
std::vector<Entry> prepare(const Scene& scene, const Camera& cam, const RenderOptions& opts) {
  cam.validate();
  std::vector<Entry> entries;
  entries.reserve(scene.gaussians.size());
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    auto proj = project(scene.gaussians[i], cam, opts.dilation);
    if (!proj) continue;
    const double alpha = proj->splat.alpha;
    if (alpha < opts.alpha_skip) continue;
    const double r2 = 2.0 * std::log(alpha / opts.alpha_skip);
    const double ex = std::sqrt(r2 * proj->splat.cov(0, 0));
    const double ey = std::sqrt(r2 * proj->splat.cov(1, 1));
    const Vec2 m = proj->splat.mean;
    const double lx = std::max(0.0, std::floor(m.x() - ex - 0.5));
    const double hx = std::min(cam.width - 1.0, std::ceil(m.x() + ex - 0.5));
    const double ly = std::max(0.0, std::floor(m.y() - ey - 0.5));
    const double hy = std::min(cam.height - 1.0, std::ceil(m.y() + ey - 0.5));
    if (!(lx <= hx && ly <= hy)) continue;
    Entry e{i, *proj, static_cast<int>(lx), static_cast<int>(hx), static_cast<int>(ly), static_cast<int>(hy)};
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.proj.splat.depth < b.proj.splat.depth;
  });
  return entries;
}

struct Contribution {
  std::size_t entry;
  double alpha;       // clamped alpha-hat
  double gauss;       // exp(power)
  double trans;       // transmittance before this splat
  bool clamped;
  double dx, dy;
};

// Composites one pixel. Fills `contribs` when non-null.
template <bool kRecord>
void shade_pixel(const std::vector<Entry>& entries, const RenderOptions& opts, int px, int py,
                 Vec3& color, double& trans, double& weight_sum,
                 std::vector<Contribution>* contribs) {
  const double x = px + 0.5;
  const double y = py + 0.5;
  color.setZero();
  trans = 1.0;
  weight_sum = 0.0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    if (px < e.x0 || px > e.x1 || py < e.y0 || py > e.y1) continue;
    const Mat2& q = e.proj.conic;
    const double dx = x - e.proj.splat.mean.x();
    const double dy = y - e.proj.splat.mean.y();
    const double power = -0.5 * (q(0, 0) * dx * dx + 2.0 * q(0, 1) * dx * dy + q(1, 1) * dy * dy);
    const double gauss = std::exp(power);
    const double raw = e.proj.splat.alpha * gauss;
    const bool clamped = raw > opts.alpha_clamp;
    const double a = clamped ? opts.alpha_clamp : raw;
    if (a < opts.alpha_skip) continue;
    const double w = a * trans;
    color += w * e.proj.splat.color;
    weight_sum += w;
    if constexpr (kRecord) contribs->push_back({k, a, gauss, trans, clamped, dx, dy});
    trans *= 1.0 - a;
    if (trans < opts.t_stop) break;
  }
}

}  // namespace

RenderStats render_with_stats(const Scene& scene, const Camera& cam, const RenderOptions& opts) {
  const auto entries = prepare(scene, cam, opts);
  RenderStats out{Image(cam.width, cam.height), {}, {}};
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  out.transmittance.resize(n);
  out.weight_sum.resize(n);
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      Vec3 c;
      double t, ws;
      shade_pixel<false>(entries, opts, px, py, c, t, ws, nullptr);
      c += t * scene.background;
      for (int ch = 0; ch < 3; ++ch) out.image.at(px, py, ch) = c[ch];
      const std::size_t idx = static_cast<std::size_t>(py) * cam.width + px;
      out.transmittance[idx] = t;
      out.weight_sum[idx] = ws;
    }
  }
  return out;
}

Image render(const Scene& scene, const Camera& cam, const RenderOptions& opts) {
  return render_with_stats(scene, cam, opts).image;
}

std::vector<GaussianGrad> render_vjp(const Scene& scene, const Camera& cam,
                                     const Image& grad_image, const RenderOptions& opts) {
  if (grad_image.width() != cam.width || grad_image.height() != cam.height) {
    throw ShapeError("render_vjp: cotangent image is " + std::to_string(grad_image.width()) +
                     "x" + std::to_string(grad_image.height()) + ", camera is " +
                     std::to_string(cam.width) + "x" + std::to_string(cam.height));
  }
  const auto entries = prepare(scene, cam, opts);
  std::vector<SplatGrad> splat_grads(entries.size());
  std::vector<Contribution> contribs;

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const Vec3 g(grad_image.at(px, py, 0), grad_image.at(px, py, 1), grad_image.at(px, py, 2));
      if (g.isZero(0.0)) continue;
      contribs.clear();
      Vec3 c;
      double t_final, ws;
      shade_pixel<true>(entries, opts, px, py, c, t_final, ws, &contribs);

      // Walk back to front; `behind` is the color composited behind the
      // current splat, already attenuated by everything in front of it.
      double behind = g.dot(scene.background) * t_final;
      for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
        const Entry& e = entries[it->entry];
        SplatGrad& sg = splat_grads[it->entry];
        const double a = it->alpha;
        const double gc = g.dot(e.proj.splat.color);
        sg.color += (a * it->trans) * g;
        const double d_alpha = it->trans * gc - behind / (1.0 - a);
        behind += gc * a * it->trans;
        if (it->clamped) continue;
        sg.alpha += d_alpha * it->gauss;
        const double d_power = d_alpha * a;
        const Mat2& q = e.proj.conic;
        sg.mean.x() += d_power * (q(0, 0) * it->dx + q(0, 1) * it->dy);
        sg.mean.y() += d_power * (q(0, 1) * it->dx + q(1, 1) * it->dy);
        sg.conic[0] += d_power * (-0.5 * it->dx * it->dx);
        sg.conic[1] += d_power * (-it->dx * it->dy);
        sg.conic[2] += d_power * (-0.5 * it->dy * it->dy);
      }
    }
  }

  std::vector<GaussianGrad> grads(scene.gaussians.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    grads[entries[k].index] = project_backward(cam, entries[k].proj, splat_grads[k]);
  }
  return grads;
}

}  // namespace stegosplat::splat
