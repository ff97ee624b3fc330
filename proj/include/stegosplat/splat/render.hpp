#pragma once

#include <vector>

#include "stegosplat/core/image.hpp"
#include "stegosplat/splat/types.hpp"

namespace stegosplat::splat {

/// Front-to-back alpha compositing of the depth-sorted projected splats over
/// the scene background. Splats are sorted once per view (stable, so equal
/// depths keep index order).
Image render(const Scene& scene, const Camera& cam, const RenderOptions& opts = {});

struct RenderStats {
  Image image;
  std::vector<double> transmittance;   // final T per pixel, row-major
  std::vector<double> weight_sum;      // sum of compositing weights per pixel
};

RenderStats render_with_stats(const Scene& scene, const Camera& cam,
                              const RenderOptions& opts = {});

/// Vector-Jacobian product of `render`: gradient of sum_p <grad_image(p), C(p)>
/// with respect to every Gaussian parameter. One entry per scene Gaussian.
std::vector<GaussianGrad> render_vjp(const Scene& scene, const Camera& cam,
                                     const Image& grad_image, const RenderOptions& opts = {});

}  // namespace stegosplat::splat
