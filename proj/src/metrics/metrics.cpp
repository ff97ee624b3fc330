#include "stegosplat/metrics/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "stegosplat/core/error.hpp"

namespace stegosplat::metrics {
namespace {

using Kernel = std::array<double, kSsimWindow>;

const Kernel& gaussian_window() {
  static const Kernel k = [] {
    Kernel w{};
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
  }();
  return k;
}

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.0) {}
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable 'valid' filtering: output is (w - 10) x (h - 10).
Plane filter_valid(const Plane& in) {
  const auto& k = gaussian_window();
  const int ow = in.w - kSsimWindow + 1, oh = in.h - kSsimWindow + 1;
  Plane rows(ow, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * in(x + i, y);
      rows(x, y) = acc;
    }
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * rows(x, y + i);
      out(x, y) = acc;
    }
  return out;
}

// Adjoint of filter_valid.
Plane filter_valid_adjoint(const Plane& in, int w, int h) {
  const auto& k = gaussian_window();
  Plane cols(in.w, h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int i = 0; i < kSsimWindow; ++i) cols(x, y + i) += k[i] * in(x, y);
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int i = 0; i < kSsimWindow; ++i) out(x + i, y) += k[i] * cols(x, y);
  return out;
}

Plane channel(const Image& img, int c) {
  Plane p(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p(x, y) = img.at(x, y, c);
  return p;
}

Plane product(const Plane& a, const Plane& b) {
  Plane p(a.w, a.h);
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = a.v[i] * b.v[i];
  return p;
}

void check_ssim_inputs(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw ShapeError("ssim: image smaller than the 11x11 window");
  }
}

template <bool kGrad>
double ssim_impl(const Image& a, const Image& b, Image* grad) {
  check_ssim_inputs(a, b);
  const double c1 = kSsimK1 * kSsimK1;
  const double c2 = kSsimK2 * kSsimK2;
  const int w = a.width(), h = a.height();
  const double count = static_cast<double>((w - kSsimWindow + 1) * (h - kSsimWindow + 1)) * 3.0;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane x = channel(a, c);
    const Plane y = channel(b, c);
    const Plane mx = filter_valid(x);
    const Plane my = filter_valid(y);
    const Plane exx = filter_valid(product(x, x));
    const Plane eyy = filter_valid(product(y, y));
    const Plane exy = filter_valid(product(x, y));
    Plane d_mu(mx.w, mx.h), d_exx(mx.w, mx.h), d_exy(mx.w, mx.h);
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
      const double ux = mx.v[i], uy = my.v[i];
      const double sxx = exx.v[i] - ux * ux;
      const double syy = eyy.v[i] - uy * uy;
      const double sxy = exy.v[i] - ux * uy;
      const double a1 = 2.0 * ux * uy + c1;
      const double a2 = 2.0 * sxy + c2;
      const double b1 = ux * ux + uy * uy + c1;
      const double b2 = sxx + syy + c2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if constexpr (kGrad) {
        d_exx.v[i] = -s / b2 / count;
        d_exy.v[i] = 2.0 * s / a2 / count;
        // Paired so each difference is exactly zero when the inputs match.
        d_mu.v[i] = s * ((2.0 * uy / a1 - 2.0 * ux / b1) + (2.0 * ux / b2 - 2.0 * uy / a2)) / count;
      }
    }
    if constexpr (kGrad) {
      const Plane g_mu = filter_valid_adjoint(d_mu, w, h);
      const Plane g_exx = filter_valid_adjoint(d_exx, w, h);
      const Plane g_exy = filter_valid_adjoint(d_exy, w, h);
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          grad->at(xx, yy, c) = g_mu(xx, yy) + 2.0 * x(xx, yy) * g_exx(xx, yy) + y(xx, yy) * g_exy(xx, yy);
    }
  }
  return total / count;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw ShapeError("psnr: empty images");
  auto pa = a.pixels();
  auto pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(pa.size());
  if (mse < 1e-10) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) { return ssim_impl<false>(a, b, nullptr); }

SsimGradient ssim_with_gradient(const Image& a, const Image& b) {
  SsimGradient out;
  out.grad = Image(a.width(), a.height());
  out.value = ssim_impl<true>(a, b, &out.grad);
  return out;
}

MetricReport compare(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b)}; }

}  // namespace stegosplat::metrics
