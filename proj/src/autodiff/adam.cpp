#include "stegosplat/autodiff/adam.hpp"

#include <cmath>
#include <string>

#include "stegosplat/core/error.hpp"

namespace stegosplat::autodiff {

template <class T>
void adam_step(std::span<BasicTensor<T>> params, std::span<const BasicTensor<T>> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameter blocks but " +
                     std::to_string(grads.size()) + " gradient blocks");
  }
  if (state.step == 0 && state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.size(), 0.0);
      state.second.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first.size() != params.size()) throw ShapeError("adam_step: state/parameter block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].shape() != grads[b].shape() || state.first[b].size() != params[b].size()) {
      throw ShapeError("adam_step: block " + std::to_string(b) + " shape mismatch " +
                       shape_string(params[b].shape()) + " vs " + shape_string(grads[b].shape()));
    }
  }

  ++state.step;
  const auto& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first[b];
    auto& v = state.second[b];
    auto p = params[b].data();
    auto g = grads[b].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

template void adam_step<float>(std::span<BasicTensor<float>>, std::span<const BasicTensor<float>>,
                               AdamState&, double);
template void adam_step<double>(std::span<BasicTensor<double>>,
                                std::span<const BasicTensor<double>>, AdamState&, double);

}  // namespace stegosplat::autodiff
