#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stegosplat/autodiff/ops.hpp"
#include "stegosplat/core/image.hpp"

namespace stegosplat::decoder {

using autodiff::Tensor;
using autodiff::Var;

/// One conv block f_i. Weight and bias together form the block's parameter
/// vector for gradient statistics.
struct DecoderBlock {
  std::string name;
  int stride = 1;
  Tensor weight;  // (Cout, Cin, k, k)
  Tensor bias;    // (Cout)

  std::size_t parameter_count() const { return weight.size() + bias.size(); }
  friend bool operator==(const DecoderBlock&, const DecoderBlock&) = default;
};

/// Small U-Net: enc1 (w, full res), enc2 (2w, /2), enc3 (4w, /4), then
/// nearest x2 upsampling with skip concatenation back up to full resolution
/// and a 1x1 output conv followed by a sigmoid.
class DecoderNet {
 public:
  static constexpr int kDownsamplings = 2;
  static constexpr double kLeakySlope = 0.2;

  DecoderNet(int width, std::vector<DecoderBlock> blocks);

  int width() const { return width_; }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<DecoderBlock>& blocks() const { return blocks_; }
  std::vector<DecoderBlock>& blocks() { return blocks_; }
  std::size_t parameter_count() const;

  friend bool operator==(const DecoderNet&, const DecoderNet&) = default;

 private:
  int width_;
  std::vector<DecoderBlock> blocks_;
};

/// Deterministic He-normal initialization (leaky-relu gain), zero biases.
DecoderNet build_decoder(std::uint64_t seed, int width = 16);

/// Block shapes for a given width, with zero-filled tensors.
DecoderNet decoder_layout(int width);

/// Variables of one decoder application recorded on a tape.
struct DecoderGraph {
  Var input;
  Var output;
  std::vector<Var> weights;
  std::vector<Var> biases;
};

/// Records F(input) on `tape`; parameters are registered as grad-requiring leaves.
DecoderGraph record_decoder(autodiff::Tape<float>& tape, const DecoderNet& net, Var input);

Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

/// Throws ShapeError unless both dims are divisible by 2^kDownsamplings.
void require_decodable(int width, int height);

/// Forward pass only. Output channels lie in (0, 1).
Image decode(const DecoderNet& net, const Image& img);

/// Per-block gradients, each flattened as weight followed by bias.
using LayerGradients = std::vector<std::vector<float>>;

LayerGradients collect_gradients(const autodiff::Gradients<float>& grads, const DecoderGraph& graph,
                                 const DecoderNet& net);

struct LayerGradStats {
  std::vector<double> cosine;  // s_i
  std::vector<double> weight;  // w_i = sigmoid(s_i)
};

/// Norm below which a block's gradient counts as zero; s_i falls back to 0.
inline constexpr double kZeroGradNorm = 1e-12;

/// Cosine similarity of the two losses' gradients per block and its sigmoid.
LayerGradStats per_layer_cosine(const LayerGradients& pos, const LayerGradients& neg);

// Checkpoint: "SPLDEC01", u32 width, u32 tensor count, then per tensor
// {u8 kind (0 weight, 1 bias), u8 stride, u8 rank, u32 dims[rank]}, then the
// tensors' values as little-endian float32 in the same order.
std::vector<std::uint8_t> serialize(const DecoderNet& net);
DecoderNet deserialize(std::span<const std::uint8_t> bytes);
void save_checkpoint(const DecoderNet& net, const std::filesystem::path& path);
DecoderNet load_checkpoint(const std::filesystem::path& path);

}  // namespace stegosplat::decoder
