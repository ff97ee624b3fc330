#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stegosplat/autodiff/tensor.hpp"

namespace stegosplat::autodiff {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments are kept in double regardless of the parameter type.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/// One bias-corrected Adam update of every block in `params`. The state is
/// sized lazily on the first call; afterwards block shapes must not change.
template <class T>
void adam_step(std::span<BasicTensor<T>> params, std::span<const BasicTensor<T>> grads,
               AdamState& state, double lr);

}  // namespace stegosplat::autodiff
