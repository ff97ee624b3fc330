#include "stegosplat/decoder/decoder.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include "stegosplat/core/error.hpp"
#include "stegosplat/core/rng.hpp"

namespace stegosplat::decoder {

namespace ad = autodiff;

DecoderNet::DecoderNet(int width, std::vector<DecoderBlock> blocks)
    : width_(width), blocks_(std::move(blocks)) {
  if (blocks_.size() < 3) throw std::invalid_argument("decoder needs at least 3 blocks");
}

std::size_t DecoderNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.parameter_count();
  return n;
}

DecoderNet decoder_layout(int width) {
  if (width < 4) throw std::invalid_argument("decoder width must be >= 4");
  const std::size_t w = static_cast<std::size_t>(width);
  auto block = [](std::string name, std::size_t cin, std::size_t cout, std::size_t k, int stride) {
    return DecoderBlock{std::move(name), stride, Tensor({cout, cin, k, k}), Tensor({cout})};
  };
  std::vector<DecoderBlock> blocks;
  blocks.push_back(block("enc1", 3, w, 3, 1));
  blocks.push_back(block("enc2", w, 2 * w, 3, 2));
  blocks.push_back(block("enc3", 2 * w, 4 * w, 3, 2));
  blocks.push_back(block("dec2", 6 * w, 2 * w, 3, 1));
  blocks.push_back(block("dec1", 3 * w, w, 3, 1));
  blocks.push_back(block("out", w, 3, 1, 1));
  return DecoderNet(width, std::move(blocks));
}

DecoderNet build_decoder(std::uint64_t seed, int width) {
  DecoderNet net = decoder_layout(width);
  Rng rng(seed);
  const double gain = std::sqrt(2.0 / (1.0 + DecoderNet::kLeakySlope * DecoderNet::kLeakySlope));
  for (auto& b : net.blocks()) {
    const double fan_in = static_cast<double>(b.weight.dim(1) * b.weight.dim(2) * b.weight.dim(3));
    const double stddev = gain / std::sqrt(fan_in);
    for (auto& v : b.weight.data()) v = static_cast<float>(stddev * rng.normal());
  }
  return net;
}

DecoderGraph record_decoder(ad::Tape<float>& tape, const DecoderNet& net, Var input) {
  DecoderGraph g;
  g.input = input;
  for (const auto& b : net.blocks()) {
    g.weights.push_back(tape.leaf(b.weight, true));
    g.biases.push_back(tape.leaf(b.bias, true));
  }
  std::size_t layer = 0;
  auto conv = [&](std::size_t i, Var x) {
    const Var params[] = {g.weights[i], g.biases[i]};
    const Var in[] = {x};
    return ad::forward_layer<float>(tape, ad::Conv2d{net.blocks()[i].stride}, in, params, layer++);
  };
  auto unary = [&](const ad::LayerKind& kind, Var x) {
    const Var in[] = {x};
    return ad::forward_layer<float>(tape, kind, in, {}, layer++);
  };
  auto binary = [&](const ad::LayerKind& kind, Var a, Var b) {
    const Var in[] = {a, b};
    return ad::forward_layer<float>(tape, kind, in, {}, layer++);
  };
  const ad::LeakyRelu act{DecoderNet::kLeakySlope};

  const Var e1 = unary(act, conv(0, input));
  const Var e2 = unary(act, conv(1, e1));
  const Var e3 = unary(act, conv(2, e2));
  const Var d2 = unary(act, conv(3, binary(ad::Concat{}, unary(ad::Upsample2x{}, e3), e2)));
  const Var d1 = unary(act, conv(4, binary(ad::Concat{}, unary(ad::Upsample2x{}, d2), e1)));
  g.output = unary(ad::Sigmoid{}, conv(5, d1));
  return g;
}

Tensor image_to_tensor(const Image& img) {
  const std::size_t h = img.height(), w = img.width();
  Tensor t({3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t[(c * h + y) * w + x] = static_cast<float>(img.at(static_cast<int>(x), static_cast<int>(y),
                                                           static_cast<int>(c)));
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("expected a (3, H, W) tensor");
  const std::size_t h = t.dim(1), w = t.dim(2);
  Image img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        img.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(c)) = t[(c * h + y) * w + x];
  return img;
}

void require_decodable(int width, int height) {
  constexpr int div = 1 << DecoderNet::kDownsamplings;
  if (width <= 0 || height <= 0 || width % div != 0 || height % div != 0) {
    throw ShapeError("decoder input " + std::to_string(width) + "x" + std::to_string(height) +
                     " is not divisible by " + std::to_string(div));
  }
}

Image decode(const DecoderNet& net, const Image& img) {
  require_decodable(img.width(), img.height());
  ad::Tape<float> tape;
  const Var x = tape.leaf(image_to_tensor(img), false);
  const auto graph = record_decoder(tape, net, x);
  Image out = tensor_to_image(tape.value(graph.output));
  // A float sigmoid saturates to exactly 0 or 1 past |x| ~ 17.
  constexpr double lo = std::numeric_limits<float>::min(), hi = 1.0 - std::numeric_limits<float>::epsilon() / 2;
  for (double& v : out.pixels()) v = std::clamp(v, lo, hi);
  return out;
}

LayerGradients collect_gradients(const ad::Gradients<float>& grads, const DecoderGraph& graph,
                                 const DecoderNet& net) {
  LayerGradients out(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& b = net.blocks()[i];
    out[i].assign(b.parameter_count(), 0.0f);
    if (const auto* gw = grads.find(graph.weights[i]))
      std::copy(gw->data().begin(), gw->data().end(), out[i].begin());
    if (const auto* gb = grads.find(graph.biases[i]))
      std::copy(gb->data().begin(), gb->data().end(), out[i].begin() + b.weight.size());
  }
  return out;
}

LayerGradStats per_layer_cosine(const LayerGradients& pos, const LayerGradients& neg) {
  if (pos.size() != neg.size()) {
    throw ShapeError("per_layer_cosine: " + std::to_string(pos.size()) + " vs " +
                     std::to_string(neg.size()) + " layers");
  }
  LayerGradStats stats;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i].size() != neg[i].size()) {
      throw ShapeError("per_layer_cosine: layer " + std::to_string(i) + " sizes differ");
    }
    double dot = 0.0, np = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < pos[i].size(); ++k) {
      const double a = pos[i][k], b = neg[i][k];
      dot += a * b;
      np += a * a;
      nn += b * b;
    }
    np = std::sqrt(np);
    nn = std::sqrt(nn);
    double s = 0.0;
    if (np >= kZeroGradNorm && nn >= kZeroGradNorm) s = std::clamp(dot / (np * nn), -1.0, 1.0);
    stats.cosine.push_back(s);
    stats.weight.push_back(1.0 / (1.0 + std::exp(-s)));
  }
  return stats;
}

}  // namespace stegosplat::decoder
