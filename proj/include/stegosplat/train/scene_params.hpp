#pragma once

#include <array>
#include <vector>

#include "stegosplat/autodiff/adam.hpp"
#include "stegosplat/autodiff/tensor.hpp"
#include "stegosplat/splat/types.hpp"

namespace stegosplat::train {

using ParamBlock = autodiff::BasicTensor<double>;

enum class Group { kPosition, kLogScale, kRotation, kOpacity, kRgb };
inline constexpr std::size_t kGroups = 5;

/// The scene's parameters as one (N, d) tensor per group.
std::array<ParamBlock, kGroups> pack_scene(const splat::Scene& scene);
void unpack_scene(const std::array<ParamBlock, kGroups>& blocks, splat::Scene& scene);
std::array<ParamBlock, kGroups> pack_grads(const std::vector<splat::GaussianGrad>& grads);

/// Adam over all Gaussian parameters with one state (and learning rate) per
/// group. Rates are base_lr times a fixed per-group multiplier.
class SceneOptimizer {
 public:
  static constexpr std::array<double, kGroups> kRateScale = {0.5, 1.0, 1.0, 5.0, 2.5};

  explicit SceneOptimizer(double base_lr) : base_lr_(base_lr) {}

  /// Applies one step and renormalizes every quaternion.
  void step(splat::Scene& scene, const std::vector<splat::GaussianGrad>& grads);

  void set_base_lr(double lr) { base_lr_ = lr; }
  double rate(Group g) const { return base_lr_ * kRateScale[static_cast<std::size_t>(g)]; }
  std::int64_t steps() const { return states_[0].step; }

 private:
  double base_lr_;
  std::array<autodiff::AdamState, kGroups> states_{};
};

/// Elementwise a + s * b.
void axpy(std::vector<splat::GaussianGrad>& a, double s, const std::vector<splat::GaussianGrad>& b);

}  // namespace stegosplat::train
