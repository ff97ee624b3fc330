#include "stegosplat/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stegosplat/core/error.hpp"

namespace stegosplat {

Image::Image(int width, int height, double fill)
    : width_(width),
      height_(height),
      pixels_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 0 || height < 0) throw ShapeError("image dimensions must be non-negative");
}

Image::Image(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) throw ShapeError("image dimensions must be non-negative");
  if (pixels_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw ShapeError("pixel buffer length does not match " + std::to_string(width) + "x" +
                     std::to_string(height) + "x3");
  }
}

Image resize_bilinear(const Image& src, int width, int height) {
  if (src.empty()) throw ShapeError("cannot resample an empty image");
  if (src.width() == width && src.height() == height) return src;
  Image out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = src.at(x0, y0, c) * (1 - tx) + src.at(x1, y0, c) * tx;
        const double bot = src.at(x0, y1, c) * (1 - tx) + src.at(x1, y1, c) * tx;
        out.at(x, y, c) = top * (1 - ty) + bot * ty;
      }
    }
  }
  return out;
}

Image clamp01(Image img) {
  for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": image shapes differ (" + std::to_string(a.width()) +
                     "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

double mean_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_abs_diff");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) sum += std::abs(pa[i] - pb[i]);
  return sum / static_cast<double>(pa.size());
}

}  // namespace stegosplat
