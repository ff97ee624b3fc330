#pragma once

// Finite-difference checks shared by the unit tests and the acceptance run.

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "stegosplat/autodiff/ops.hpp"
#include "stegosplat/core/rng.hpp"
#include "stegosplat/splat/render.hpp"
#include "render_oracle.hpp"
#include "support.hpp"

namespace testing_support {

struct FdReport {
  int checked = 0;
  int failed = 0;
  int straddling = 0;  // probes skipped because they cross a renderer branch
  std::string first_failure;
  bool ok() const { return failed == 0 && checked > 0; }

  void record(bool good, const std::string& what) {
    ++checked;
    if (good) return;
    if (failed++ == 0) first_failure = what;
  }
  void merge(const FdReport& other) {
    if (failed == 0 && other.failed > 0) first_failure = other.first_failure;
    checked += other.checked;
    failed += other.failed;
    straddling += other.straddling;
  }
};

using DTensor = autodiff::BasicTensor<double>;
using autodiff::Var;
using GraphBuilder = std::function<Var(autodiff::Tape<double>&, const std::vector<Var>&)>;

inline DTensor random_tensor(autodiff::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  DTensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Central differences (h = 1e-4) of a scalar graph against backward, for every
// element of every input.
inline FdReport check_graph_fd(const std::string& name, const GraphBuilder& build, const std::vector<DTensor>& inputs) {
  std::vector<DTensor> analytic;
  {
    autodiff::Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
    const auto grads = tape.backward(build(tape, vars));
    for (std::size_t k = 0; k < vars.size(); ++k)
      analytic.push_back(grads.find(vars[k]) ? grads.at(vars[k]) : DTensor(inputs[k].shape(), 0.0));
  }
  auto value = [&](const std::vector<DTensor>& in) {
    autodiff::Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& t : in) vars.push_back(tape.leaf(t));
    return tape.value(build(tape, vars))[0];
  };
  FdReport report;
  const double h = 1e-4;
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double fd = (value(plus) - value(minus)) / (2 * h);
      std::ostringstream what;
      what << name << " input " << k << "[" << i << "]: analytic " << analytic[k][i] << " fd " << fd;
      report.record(grad_close(analytic[k][i], fd), what.str());
    }
  return report;
}

// sum(x * w) for a fixed random w, built from add/sub/square only.
inline Var random_projection(autodiff::Tape<double>& t, Var x, std::uint64_t seed) {
  const Var w = t.leaf(random_tensor(t.value(x).shape(), seed));
  return autodiff::sum(t, autodiff::sub(t, autodiff::square(t, autodiff::add(t, x, w)),
                                        autodiff::square(t, autodiff::sub(t, x, w))));
}

// One randomized finite-difference check per differentiable op.
inline std::vector<std::pair<std::string, FdReport>> check_every_layer(std::uint64_t seed) {
  using namespace autodiff;
  using T = Tape<double>;
  using In = const std::vector<Var>&;
  const std::uint64_t s = seed * 100;
  std::vector<std::pair<std::string, FdReport>> out;
  auto run = [&](const std::string& name, const GraphBuilder& b, std::vector<DTensor> in) {
    out.emplace_back(name, check_graph_fd(name, b, in));
  };
  run("conv2d stride 1", [s](T& t, In v) { return random_projection(t, conv2d(t, v[0], v[1], v[2], 1), s + 1); },
      {random_tensor({2, 5, 6}, s + 2), random_tensor({3, 2, 3, 3}, s + 3), random_tensor({3}, s + 4)});
  run("conv2d stride 2", [s](T& t, In v) { return random_projection(t, conv2d(t, v[0], v[1], v[2], 2), s + 5); },
      {random_tensor({2, 6, 6}, s + 6), random_tensor({3, 2, 3, 3}, s + 7), random_tensor({3}, s + 8)});
  run("conv2d 1x1", [s](T& t, In v) { return random_projection(t, conv2d(t, v[0], v[1], v[2], 1), s + 9); },
      {random_tensor({3, 4, 4}, s + 10), random_tensor({2, 3, 1, 1}, s + 11), random_tensor({2}, s + 12)});
  run("leaky_relu", [s](T& t, In v) { return random_projection(t, leaky_relu(t, v[0], 0.2), s + 13); },
      {random_tensor({2, 4, 4}, s + 14)});
  run("upsample2x", [s](T& t, In v) { return random_projection(t, upsample2x(t, v[0]), s + 15); },
      {random_tensor({2, 3, 4}, s + 16)});
  run("concat", [s](T& t, In v) { return random_projection(t, concat_channels(t, v[0], v[1]), s + 17); },
      {random_tensor({2, 3, 3}, s + 18), random_tensor({1, 3, 3}, s + 19)});
  run("sigmoid", [s](T& t, In v) { return random_projection(t, sigmoid(t, v[0]), s + 20); },
      {random_tensor({2, 3, 3}, s + 21, -3.0, 3.0)});
  run("add", [s](T& t, In v) { return random_projection(t, add(t, v[0], v[1]), s + 22); },
      {random_tensor({2, 3, 3}, s + 23), random_tensor({2, 3, 3}, s + 24)});
  run("sub", [s](T& t, In v) { return random_projection(t, sub(t, v[0], v[1]), s + 25); },
      {random_tensor({2, 3, 3}, s + 26), random_tensor({2, 3, 3}, s + 27)});
  run("square", [s](T& t, In v) { return random_projection(t, square(t, v[0]), s + 28); },
      {random_tensor({2, 3, 3}, s + 29)});
  run("abs", [s](T& t, In v) { return random_projection(t, autodiff::abs(t, v[0]), s + 30); },
      {random_tensor({2, 3, 3}, s + 31)});
  run("mean", [](T& t, In v) { return mean(t, square(t, v[0])); }, {random_tensor({2, 3, 3}, s + 32)});
  run("l1_loss", [](T& t, In v) { return l1_loss(t, v[0], v[1]); },
      {random_tensor({2, 3, 3}, s + 33), random_tensor({2, 3, 3}, s + 34)});
  return out;
}

// dL/dtheta for L = <cot, render> against central differences, all five
// parameter groups of every Gaussian. A probe whose +h and -h scenes take
// different skip/clamp/termination branches straddles a jump of the renderer;
// such probes are counted but not compared.
inline FdReport check_render_vjp_fd(const splat::Scene& s, const splat::Camera& cam, const Image& cot,
                                    const splat::RenderOptions& opts = {}) {
  using splat::Gaussian;
  using splat::Scene;
  const auto grads = splat::render_vjp(s, cam, cot, opts);
  auto loss = [&](const Scene& sc) {
    const Image img = splat::render(sc, cam, opts);
    double l = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) l += img.pixels()[i] * cot.pixels()[i];
    return l;
  };
  auto param = [](Gaussian& g, int group, int k) -> double& {
    switch (group) {
      case 0: return g.position[k];
      case 1: return g.log_scale[k];
      case 2: return g.rotation[k];
      case 3: return g.opacity_logit;
      default: return g.rgb[k];
    }
  };
  auto grad = [](const splat::GaussianGrad& g, int group, int k) {
    switch (group) {
      case 0: return g.position[k];
      case 1: return g.log_scale[k];
      case 2: return g.rotation[k];
      case 3: return g.opacity_logit;
      default: return g.rgb[k];
    }
  };
  static const char* kNames[5] = {"position", "log_scale", "rotation", "opacity", "rgb"};
  const int dims[5] = {3, 3, 4, 1, 3};
  const double h = 1e-4;
  FdReport report;
  for (std::size_t i = 0; i < s.gaussians.size(); ++i)
    for (int group = 0; group < 5; ++group)
      for (int k = 0; k < dims[group]; ++k) {
        Scene plus = s, minus = s;
        param(plus.gaussians[i], group, k) += h;
        param(minus.gaussians[i], group, k) -= h;
        if (oracle_branches(plus, cam, opts) != oracle_branches(minus, cam, opts)) {
          ++report.straddling;
          continue;
        }
        const double fd = (loss(plus) - loss(minus)) / (2 * h);
        const double an = grad(grads[i], group, k);
        std::ostringstream what;
        what << "gaussian " << i << " " << kNames[group] << "[" << k << "]: analytic " << an << " fd " << fd;
        report.record(grad_close(an, fd), what.str());
      }
  return report;
}

inline FdReport check_render_vjp_fd(std::uint64_t seed, int n, const splat::RenderOptions& opts = {}) {
  const splat::Scene s = small_scene(seed, n);
  Rng rng(seed + 1000);
  Image cot(16, 16);
  for (double& v : cot.pixels()) v = rng.uniform(-1.0, 1.0);
  return check_render_vjp_fd(s, front_camera(16), cot, opts);
}

}  // namespace testing_support
