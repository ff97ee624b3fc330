#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stegosplat/attacks/attacks.hpp"

namespace stegosplat::attacks {
namespace {

// Half-sample symmetric reflection, repeated for kernels wider than the image.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("blur sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + r];
  }
  for (double& v : k) v /= total;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (sigma == 0.0) return img;
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(reflect(x + i, w), y, c);
        tmp.at(x, y, c) = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, reflect(y + i, h), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

Image apply(const AttackSpec& spec, const Image& img) {
  if (const auto* b = std::get_if<GaussianBlur>(&spec)) return gaussian_blur(img, b->sigma);
  return jpeg_compress(img, std::get<Jpeg>(spec).ratio);
}

std::string describe(const AttackSpec& spec) {
  std::ostringstream os;
  if (const auto* b = std::get_if<GaussianBlur>(&spec)) {
    os << "blur:" << b->sigma;
  } else {
    os << "jpeg:" << std::get<Jpeg>(spec).ratio;
  }
  return os.str();
}

AttackSpec parse_attack(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("attack must look like blur:<sigma> or jpeg:<ratio>");
  const std::string kind = text.substr(0, colon);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text.substr(colon + 1), &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("attack parameter is not a number: " + text);
  }
  if (used != text.size() - colon - 1) throw std::invalid_argument("attack parameter is not a number: " + text);
  if (kind == "blur") {
    if (!(value >= 0.0)) throw std::invalid_argument("blur sigma must be >= 0");
    return GaussianBlur{value};
  }
  if (kind == "jpeg") {
    if (!(value > 0.0 && value <= 1.0)) throw std::invalid_argument("jpeg ratio must be in (0, 1]");
    return Jpeg{value};
  }
  throw std::invalid_argument("unknown attack kind: " + kind);
}

}  // namespace stegosplat::attacks
