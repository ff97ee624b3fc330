#include "stegosplat/train/teacher.hpp"

#include <cmath>
#include <string>

#include "stegosplat/core/error.hpp"
#include "stegosplat/metrics/metrics.hpp"
#include "stegosplat/splat/render.hpp"
#include "stegosplat/train/scene_params.hpp"

namespace stegosplat::train {

PhotometricLoss photometric_loss(const Image& render, const Image& target) {
  require_same_shape(render, target, "photometric_loss");
  const auto ss = metrics::ssim_with_gradient(render, target);
  PhotometricLoss out;
  out.grad = Image(render.width(), render.height());
  const auto r = render.pixels();
  const auto t = target.pixels();
  const auto gs = ss.grad.pixels();
  auto g = out.grad.pixels();
  const double n = static_cast<double>(r.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - t[i];
    l1 += std::abs(d);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    g[i] = kTeacherL1Weight * sign / n - (1.0 - kTeacherL1Weight) * gs[i];
  }
  out.value = kTeacherL1Weight * l1 / n + (1.0 - kTeacherL1Weight) * (1.0 - ss.value);
  return out;
}

double mean_view_psnr(const splat::Scene& scene, const std::vector<View>& views) {
  if (views.empty()) return 0.0;
  double total = 0.0;
  for (const View& v : views) total += metrics::psnr(splat::render(scene, v.camera), v.target);
  return total / static_cast<double>(views.size());
}

TeacherResult pretrain_teacher(const splat::Scene& init, const std::vector<View>& views,
                               const TrainConfig& cfg, const TeacherCallback& progress) {
  if (views.size() < 2) throw std::invalid_argument("pretrain_teacher: need at least two views");
  if (init.gaussians.empty()) throw std::invalid_argument("pretrain_teacher: empty initial scene");
  for (const View& v : views) {
    v.camera.validate();
    if (v.target.width() != v.camera.width || v.target.height() != v.camera.height) {
      throw ShapeError("pretrain_teacher: target size differs from its camera");
    }
  }

  TeacherResult result;
  result.scene = init;
  SceneOptimizer opt(cfg.lr_teacher);
  for (int step = 0; step < cfg.steps_teacher; ++step) {
    const View& v = views[static_cast<std::size_t>(step) % views.size()];
    const Image img = splat::render(result.scene, v.camera);
    const PhotometricLoss loss = photometric_loss(img, v.target);
    if (!std::isfinite(loss.value)) {
      throw NumericError("pretrain_teacher: non-finite loss at step " + std::to_string(step));
    }
    result.loss.push_back(loss.value);
    if (progress) progress(step, loss.value);
    opt.step(result.scene, splat::render_vjp(result.scene, v.camera, loss.grad));
  }
  result.train_psnr = mean_view_psnr(result.scene, views);
  return result;
}

}  // namespace stegosplat::train
