#pragma once

#include <cstdint>

#include "stegosplat/core/image.hpp"
#include "stegosplat/io/scene_io.hpp"
#include "stegosplat/splat/types.hpp"

namespace stegosplat::io {

/// Random scene: positions uniform in the cube [-extent/2, extent/2]^3,
/// log-scales uniform in [ln(0.02 extent), ln(0.08 extent)], uniformly random
/// unit quaternions, opacity logits in [0, 2] and color logits in [-2, 2].
splat::Scene generate_scene(std::uint64_t seed, int n_gaussians, double extent,
                            const splat::Vec3& background = splat::Vec3::Zero());

/// Camera looking from `eye` at `target`, world +y up.
splat::Camera look_at_camera(const splat::Vec3& eye, const splat::Vec3& target, int resolution,
                             double fov_x_degrees = 60.0);

/// n cameras evenly spaced on a horizontal circle around `target`; azimuth
/// 0 sits at target + radius * (0, 0, 1) and increases towards +x.
PoseSet generate_pose_ring(int n_views, double radius, const splat::Vec3& target, int resolution);

struct Perturbation {
  double position = 0.0;     // world units, normal std
  double log_scale = 0.0;
  double opacity_logit = 0.0;
  double rgb = 0.0;
};

/// Adds seeded Gaussian noise to every parameter group.
splat::Scene perturb_scene(const splat::Scene& scene, std::uint64_t seed, const Perturbation& amount);

/// Procedural RGB test pattern (soft discs over a gradient), values in [0, 1].
Image generate_hidden_image(std::uint64_t seed, int size = 64);

}  // namespace stegosplat::io
