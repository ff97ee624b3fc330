#include "stegosplat/train/scene_params.hpp"

#include <span>

#include "stegosplat/core/error.hpp"

namespace stegosplat::train {

using splat::Gaussian;
using splat::GaussianGrad;

namespace {

constexpr std::array<std::size_t, kGroups> kWidth = {3, 3, 4, 1, 3};

template <class G>
void copy_out(const G& g, std::array<ParamBlock, kGroups>& blocks, std::size_t i) {
  for (std::size_t a = 0; a < 3; ++a) blocks[0][i * 3 + a] = g.position[a];
  for (std::size_t a = 0; a < 3; ++a) blocks[1][i * 3 + a] = g.log_scale[a];
  for (std::size_t a = 0; a < 4; ++a) blocks[2][i * 4 + a] = g.rotation[a];
  blocks[3][i] = g.opacity_logit;
  for (std::size_t a = 0; a < 3; ++a) blocks[4][i * 3 + a] = g.rgb[a];
}

std::array<ParamBlock, kGroups> empty_blocks(std::size_t n) {
  std::array<ParamBlock, kGroups> out;
  for (std::size_t k = 0; k < kGroups; ++k) out[k] = ParamBlock({n, kWidth[k]});
  return out;
}

}  // namespace

std::array<ParamBlock, kGroups> pack_scene(const splat::Scene& scene) {
  auto blocks = empty_blocks(scene.gaussians.size());
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) copy_out(scene.gaussians[i], blocks, i);
  return blocks;
}

std::array<ParamBlock, kGroups> pack_grads(const std::vector<GaussianGrad>& grads) {
  auto blocks = empty_blocks(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) copy_out(grads[i], blocks, i);
  return blocks;
}

void unpack_scene(const std::array<ParamBlock, kGroups>& blocks, splat::Scene& scene) {
  const std::size_t n = scene.gaussians.size();
  for (std::size_t k = 0; k < kGroups; ++k) {
    if (blocks[k].size() != n * kWidth[k]) throw ShapeError("unpack_scene: block size mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    Gaussian& g = scene.gaussians[i];
    for (std::size_t a = 0; a < 3; ++a) g.position[a] = blocks[0][i * 3 + a];
    for (std::size_t a = 0; a < 3; ++a) g.log_scale[a] = blocks[1][i * 3 + a];
    for (std::size_t a = 0; a < 4; ++a) g.rotation[a] = blocks[2][i * 4 + a];
    g.opacity_logit = blocks[3][i];
    for (std::size_t a = 0; a < 3; ++a) g.rgb[a] = blocks[4][i * 3 + a];
  }
}

void SceneOptimizer::step(splat::Scene& scene, const std::vector<GaussianGrad>& grads) {
  if (grads.size() != scene.gaussians.size()) throw ShapeError("SceneOptimizer: gradient count mismatch");
  auto params = pack_scene(scene);
  const ParamBlock before = params[static_cast<std::size_t>(Group::kRotation)];
  const auto g = pack_grads(grads);
  for (std::size_t k = 0; k < kGroups; ++k) {
    autodiff::adam_step<double>(std::span(&params[k], 1), std::span(&g[k], 1), states_[k],
                                base_lr_ * kRateScale[k]);
  }
  unpack_scene(params, scene);
  // Quaternions the step left untouched keep their exact bits.
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    Gaussian& gs = scene.gaussians[i];
    bool moved = false;
    for (std::size_t a = 0; a < 4; ++a) moved = moved || gs.rotation[a] != before[i * 4 + a];
    if (!moved) continue;
    const double n = gs.rotation.norm();
    if (!(n > 0.0)) throw NumericError("SceneOptimizer: quaternion collapsed to zero");
    gs.rotation /= n;
  }
}

void axpy(std::vector<GaussianGrad>& a, double s, const std::vector<GaussianGrad>& b) {
  if (a.size() != b.size()) throw ShapeError("axpy: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i].position += s * b[i].position;
    a[i].log_scale += s * b[i].log_scale;
    a[i].rotation += s * b[i].rotation;
    a[i].opacity_logit += s * b[i].opacity_logit;
    a[i].rgb += s * b[i].rgb;
  }
}

}  // namespace stegosplat::train
