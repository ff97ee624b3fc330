#pragma once

#include <optional>

#include "stegosplat/splat/types.hpp"

namespace stegosplat::splat {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Rotation matrix of the normalized quaternion (w, x, y, z).
Mat3 quaternion_to_rotation(const Vec4& q);

/// R diag(exp(2 s)) R^T, with q renormalized internally.
Mat3 compute_cov3d(const Vec3& log_scale, const Vec4& rotation);

/// Intermediates of the projection that the backward pass reuses.
struct Projection {
  Splat2D splat;
  Vec3 cam_point;       // t = R_wc X + t_wc
  Eigen::Matrix<double, 2, 3> jw;  // J W
  Mat3 cov3d;
  Mat3 rot;             // rotation of the normalized quaternion
  Vec3 scale;           // exp(log_scale)
  Vec4 quat_unit;
  double quat_norm = 1.0;
  Mat2 conic;           // inverse of splat.cov
};

/// EWA projection; std::nullopt when the center is at or in front of the near plane.
std::optional<Projection> project(const Gaussian& g, const Camera& cam, double dilation);

inline std::optional<Splat2D> project_gaussian(const Gaussian& g, const Camera& cam,
                                               double dilation = RenderOptions{}.dilation) {
  auto p = project(g, cam, dilation);
  if (!p) return std::nullopt;
  return p->splat;
}

/// Cotangents with respect to the image-space quantities of one splat.
struct SplatGrad {
  Vec2 mean = Vec2::Zero();
  // dL/dA, dL/dB, dL/dC for the conic [[A, B], [B, C]] with power
  // -0.5 (A dx^2 + 2 B dx dy + C dy^2).
  Vec3 conic = Vec3::Zero();
  double alpha = 0.0;
  Vec3 color = Vec3::Zero();
};

/// Chain rule from image-space cotangents back to the Gaussian's parameters.
GaussianGrad project_backward(const Camera& cam, const Projection& proj, const SplatGrad& grad);

}  // namespace stegosplat::splat
