#pragma once

#include <functional>
#include <vector>

#include "stegosplat/core/image.hpp"
#include "stegosplat/splat/types.hpp"
#include "stegosplat/train/config.hpp"

namespace stegosplat::train {

struct View {
  splat::Camera camera;
  Image target;
};

inline constexpr double kTeacherL1Weight = 0.8;

struct TeacherResult {
  splat::Scene scene;
  std::vector<double> loss;    // one entry per step, before that step's update
  double train_psnr = 0.0;     // mean over views after the final step
};

/// Loss 0.8 * L1 + 0.2 * (1 - SSIM) and its gradient with respect to the
/// rendered image.
struct PhotometricLoss {
  double value = 0.0;
  Image grad;
};
PhotometricLoss photometric_loss(const Image& render, const Image& target);

using TeacherCallback = std::function<void(int step, double loss)>;

/// Fits `init` to the views with Adam (lr_teacher), cycling through views
/// in order, one view per step. Throws NumericError naming the step on a
/// non-finite loss.
TeacherResult pretrain_teacher(const splat::Scene& init, const std::vector<View>& views,
                               const TrainConfig& cfg, const TeacherCallback& progress = {});

/// Mean PSNR of the scene's renders against the view targets.
double mean_view_psnr(const splat::Scene& scene, const std::vector<View>& views);

}  // namespace stegosplat::train
