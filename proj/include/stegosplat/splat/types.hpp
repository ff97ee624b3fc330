#pragma once

#include <Eigen/Core>
#include <vector>

namespace stegosplat::splat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Learnable parameters of one splat. Activations are applied at render time:
/// scale = exp(log_scale), opacity = sigmoid(opacity_logit), color = sigmoid(rgb).
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z)
  double opacity_logit = 0.0;
  Vec3 rgb = Vec3::Zero();

  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

/// Same layout as Gaussian; holds dL/d(parameter).
struct GaussianGrad {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();
  double opacity_logit = 0.0;
  Vec3 rgb = Vec3::Zero();
};

struct Scene {
  std::vector<Gaussian> gaussians;
  Vec3 background = Vec3::Zero();

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Pinhole camera. Camera space: +z forward, +x right, +y down. Pixel (i, j)
/// has its center at (i + 0.5, j + 0.5).
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();
  double near = 0.2;

  /// Throws std::invalid_argument when intrinsics or pose are out of contract.
  void validate() const;

  Vec3 center() const { return -rotation.transpose() * translation; }

  /// Same pose, intrinsics scaled so the image is `factor` times larger.
  Camera scaled(int factor) const;

  friend bool operator==(const Camera&, const Camera&) = default;
};

struct Splat2D {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;
};

struct RenderOptions {
  double dilation = 0.3;         // px^2 added to the 2D covariance diagonal
  double alpha_clamp = 0.99;
  double alpha_skip = 1.0 / 255.0;
  double t_stop = 1e-4;          // 0 disables early termination
};

}  // namespace stegosplat::splat
