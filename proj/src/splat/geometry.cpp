#include "stegosplat/splat/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "stegosplat/core/error.hpp"

namespace stegosplat::splat {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera focal lengths must be positive");
  if (width < 8 || height < 8) throw std::invalid_argument("camera resolution must be at least 8x8");
  if (!(near > 0.0)) throw std::invalid_argument("camera near plane must be positive");
  const double err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(err <= 1e-6)) throw std::invalid_argument("camera rotation is not orthonormal");
}

Camera Camera::scaled(int factor) const {
  Camera c = *this;
  c.fx *= factor;
  c.fy *= factor;
  c.cx *= factor;
  c.cy *= factor;
  c.width *= factor;
  c.height *= factor;
  return c;
}

Mat3 quaternion_to_rotation(const Vec4& q_raw) {
  const Vec4 q = q_raw / q_raw.norm();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 compute_cov3d(const Vec3& log_scale, const Vec4& rotation) {
  const Mat3 r = quaternion_to_rotation(rotation);
  const Mat3 m = r * log_scale.array().exp().matrix().asDiagonal();
  return m * m.transpose();
}

std::optional<Projection> project(const Gaussian& g, const Camera& cam, double dilation) {
  Projection p;
  p.cam_point = cam.rotation * g.position + cam.translation;
  const double tz = p.cam_point.z();
  if (tz <= cam.near) return std::nullopt;
  const double tx = p.cam_point.x();
  const double ty = p.cam_point.y();

  p.quat_norm = g.rotation.norm();
  p.quat_unit = g.rotation / p.quat_norm;
  p.rot = quaternion_to_rotation(p.quat_unit);
  p.scale = g.log_scale.array().exp();
  const Mat3 m = p.rot * p.scale.asDiagonal();
  p.cov3d = m * m.transpose();

  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / tz, 0.0, -cam.fx * tx / (tz * tz),
         0.0, cam.fy / tz, -cam.fy * ty / (tz * tz);
  p.jw = jac * cam.rotation;

  Mat2 cov = p.jw * p.cov3d * p.jw.transpose();
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  cov(0, 0) += dilation;
  cov(1, 1) += dilation;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  if (!(det > 0.0)) throw NumericError("projected covariance is singular after dilation");
  p.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;

  p.splat.mean = Vec2(cam.fx * tx / tz + cam.cx, cam.fy * ty / tz + cam.cy);
  p.splat.cov = cov;
  p.splat.depth = tz;
  p.splat.alpha = sigmoid(g.opacity_logit);
  p.splat.color = g.rgb.unaryExpr([](double v) { return sigmoid(v); });
  return p;
}

GaussianGrad project_backward(const Camera& cam, const Projection& p, const SplatGrad& grad) {
  GaussianGrad out;

  // Activations.
  const double a = p.splat.alpha;
  out.opacity_logit = grad.alpha * a * (1.0 - a);
  for (int c = 0; c < 3; ++c) {
    const double s = p.splat.color[c];
    out.rgb[c] = grad.color[c] * s * (1.0 - s);
  }

  // Conic = cov^-1  =>  dL/dcov = -Q G_Q Q, with G_Q symmetric.
  Mat2 g_conic;
  g_conic << grad.conic[0], 0.5 * grad.conic[1], 0.5 * grad.conic[1], grad.conic[2];
  const Mat2 g_cov = -p.conic * g_conic * p.conic;

  // cov = T Sigma T^T with T = J W.
  const Mat3 g_sigma = p.jw.transpose() * g_cov * p.jw;
  const Eigen::Matrix<double, 2, 3> g_t = 2.0 * g_cov * p.jw * p.cov3d;
  const Eigen::Matrix<double, 2, 3> g_j = g_t * cam.rotation.transpose();

  const double tx = p.cam_point.x();
  const double ty = p.cam_point.y();
  const double tz = p.cam_point.z();
  const double iz = 1.0 / tz;
  const double iz2 = iz * iz;
  const double iz3 = iz2 * iz;

  Vec3 g_cam = Vec3::Zero();
  g_cam.x() += g_j(0, 2) * (-cam.fx * iz2);
  g_cam.y() += g_j(1, 2) * (-cam.fy * iz2);
  g_cam.z() += g_j(0, 0) * (-cam.fx * iz2) + g_j(0, 2) * (2.0 * cam.fx * tx * iz3) +
               g_j(1, 1) * (-cam.fy * iz2) + g_j(1, 2) * (2.0 * cam.fy * ty * iz3);

  g_cam.x() += grad.mean.x() * cam.fx * iz;
  g_cam.y() += grad.mean.y() * cam.fy * iz;
  g_cam.z() += -grad.mean.x() * cam.fx * tx * iz2 - grad.mean.y() * cam.fy * ty * iz2;

  out.position = cam.rotation.transpose() * g_cam;

  // Sigma = M M^T with M = R diag(s).
  const Mat3 m = p.rot * p.scale.asDiagonal();
  const Mat3 g_m = 2.0 * g_sigma * m;
  Mat3 g_r;
  for (int j = 0; j < 3; ++j) {
    g_r.col(j) = g_m.col(j) * p.scale[j];
    out.log_scale[j] = g_m.col(j).dot(p.rot.col(j)) * p.scale[j];
  }

  const double w = p.quat_unit[0], x = p.quat_unit[1], y = p.quat_unit[2], z = p.quat_unit[3];
  Vec4 g_q;
  g_q[0] = 2 * (-z * g_r(0, 1) + y * g_r(0, 2) + z * g_r(1, 0) - x * g_r(1, 2) - y * g_r(2, 0) +
                x * g_r(2, 1));
  g_q[1] = 2 * (y * g_r(0, 1) + z * g_r(0, 2) + y * g_r(1, 0) - 2 * x * g_r(1, 1) -
                w * g_r(1, 2) + z * g_r(2, 0) + w * g_r(2, 1) - 2 * x * g_r(2, 2));
  g_q[2] = 2 * (-2 * y * g_r(0, 0) + x * g_r(0, 1) + w * g_r(0, 2) + x * g_r(1, 0) +
                z * g_r(1, 2) - w * g_r(2, 0) + z * g_r(2, 1) - 2 * y * g_r(2, 2));
  g_q[3] = 2 * (-2 * z * g_r(0, 0) - w * g_r(0, 1) + x * g_r(0, 2) + w * g_r(1, 0) -
                2 * z * g_r(1, 1) + y * g_r(1, 2) + x * g_r(2, 0) + y * g_r(2, 1));
  // Through q / |q|.
  out.rotation = (g_q - p.quat_unit * p.quat_unit.dot(g_q)) / p.quat_norm;
  return out;
}

}  // namespace stegosplat::splat
