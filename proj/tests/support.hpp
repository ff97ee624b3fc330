#pragma once

#include <cmath>
#include <functional>

#include "stegosplat/core/rng.hpp"
#include "stegosplat/io/generate.hpp"
#include "stegosplat/splat/types.hpp"

namespace testing_support {

using namespace stegosplat;

// Small random scene in front of an identity-pose camera at the origin.
inline splat::Scene small_scene(std::uint64_t seed, int n, const splat::Vec3& background = {0.1, 0.2, 0.3}) {
  Rng rng(seed);
  splat::Scene s;
  s.background = background;
  for (int i = 0; i < n; ++i) {
    splat::Gaussian g;
    g.position = {rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(2.5, 4.0)};
    for (int a = 0; a < 3; ++a) g.log_scale[a] = rng.uniform(std::log(0.08), std::log(0.3));
    g.rotation = splat::Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    g.opacity_logit = rng.uniform(-1.0, 2.0);
    for (int a = 0; a < 3; ++a) g.rgb[a] = rng.uniform(-2.0, 2.0);
    s.gaussians.push_back(g);
  }
  return s;
}

inline splat::Camera front_camera(int size, double focal = 20.0) {
  splat::Camera c;
  c.width = c.height = size;
  c.fx = c.fy = focal;
  c.cx = c.cy = size / 2.0;
  return c;
}

// Central difference of f at x along a scalar parameter.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-6) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace testing_support
