#include "stegosplat/io/generate.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stegosplat/core/rng.hpp"

namespace stegosplat::io {

using splat::Camera;
using splat::Gaussian;
using splat::Scene;
using splat::Vec3;

namespace {

// Shoemake's method: uniform on the unit 3-sphere.
splat::Vec4 random_quaternion(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  return {b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3)};
}

}  // namespace

Scene generate_scene(std::uint64_t seed, int n_gaussians, double extent, const Vec3& background) {
  if (n_gaussians < 1) throw std::invalid_argument("generate_scene: need at least one Gaussian");
  if (!(extent > 0.0)) throw std::invalid_argument("generate_scene: extent must be positive");
  Rng rng(seed);
  const double lo = std::log(0.02 * extent), hi = std::log(0.08 * extent);
  Scene scene;
  scene.background = background;
  scene.gaussians.reserve(static_cast<std::size_t>(n_gaussians));
  for (int i = 0; i < n_gaussians; ++i) {
    Gaussian g;
    for (int a = 0; a < 3; ++a) g.position[a] = extent * (rng.uniform() - 0.5);
    for (int a = 0; a < 3; ++a) g.log_scale[a] = rng.uniform(lo, hi);
    g.rotation = random_quaternion(rng).normalized();
    g.opacity_logit = rng.uniform(0.0, 2.0);
    for (int a = 0; a < 3; ++a) g.rgb[a] = rng.uniform(-2.0, 2.0);
    scene.gaussians.push_back(g);
  }
  return scene;
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, int resolution, double fov_x_degrees) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitY());
  if (x.norm() < 1e-9) throw std::invalid_argument("look_at_camera: view direction parallel to up");
  x.normalize();
  const Vec3 y = z.cross(x);

  Camera cam;
  cam.width = cam.height = resolution;
  cam.fx = cam.fy = 0.5 * resolution / std::tan(0.5 * fov_x_degrees * std::numbers::pi / 180.0);
  cam.cx = cam.cy = 0.5 * resolution;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.translation = -cam.rotation * eye;
  return cam;
}

PoseSet generate_pose_ring(int n_views, double radius, const Vec3& target, int resolution) {
  if (n_views < 2) throw std::invalid_argument("generate_pose_ring: need at least two views");
  if (!(radius > 0.0)) throw std::invalid_argument("generate_pose_ring: radius must be positive");
  PoseSet set;
  for (int i = 0; i < n_views; ++i) {
    const double az = 2.0 * std::numbers::pi * i / n_views;
    const Vec3 eye = target + radius * Vec3(std::sin(az), 0.0, std::cos(az));
    set.cameras.push_back(look_at_camera(eye, target, resolution));
  }
  set.check_index = 0;
  return set;
}

Scene perturb_scene(const Scene& scene, std::uint64_t seed, const Perturbation& amount) {
  Rng rng(seed);
  Scene out = scene;
  for (Gaussian& g : out.gaussians) {
    for (int a = 0; a < 3; ++a) g.position[a] += amount.position * rng.normal();
    for (int a = 0; a < 3; ++a) g.log_scale[a] += amount.log_scale * rng.normal();
    g.opacity_logit += amount.opacity_logit * rng.normal();
    for (int a = 0; a < 3; ++a) g.rgb[a] += amount.rgb * rng.normal();
  }
  return out;
}

Image generate_hidden_image(std::uint64_t seed, int size) {
  if (size < 1) throw std::invalid_argument("generate_hidden_image: size must be positive");
  Rng rng(seed);
  Image img(size, size);
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.1, 0.9);
    c1[c] = rng.uniform(0.1, 0.9);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double t = (x + y + 1.0) / (2.0 * size);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1.0 - t) * c0[c] + t * c1[c];
    }

  constexpr int kDiscs = 6;
  for (int d = 0; d < kDiscs; ++d) {
    const double cx = rng.uniform(0.15, 0.85) * size, cy = rng.uniform(0.15, 0.85) * size;
    const double r = rng.uniform(0.08, 0.22) * size;
    double col[3];
    for (double& v : col) v = rng.uniform();
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dist = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        const double a = std::clamp(r - dist + 0.5, 0.0, 1.0);  // one-pixel soft edge
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1.0 - a) * img.at(x, y, c) + a * col[c];
      }
  }
  return img;
}

}  // namespace stegosplat::io
