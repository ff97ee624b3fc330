#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stegosplat {

/// RGB image, row-major, channel-interleaved (HWC), values nominally in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// Bilinear resampling with pixel-center alignment (half-pixel offsets).
Image resize_bilinear(const Image& src, int width, int height);

Image clamp01(Image img);

double mean_abs_diff(const Image& a, const Image& b);

void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace stegosplat
