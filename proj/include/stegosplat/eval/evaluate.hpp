#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stegosplat/attacks/attacks.hpp"
#include "stegosplat/core/image.hpp"
#include "stegosplat/decoder/decoder.hpp"
#include "stegosplat/io/scene_io.hpp"
#include "stegosplat/metrics/metrics.hpp"
#include "stegosplat/train/embed.hpp"

namespace stegosplat::eval {

using metrics::MetricReport;

/// Mean PSNR/SSIM of the scene against `targets` over every non-check pose.
MetricReport rendering_quality(const splat::Scene& scene, const io::PoseSet& poses,
                               const std::vector<Image>& targets);

/// What the owner extracts from a check-view image: the decoder output, or
/// the image itself when there is no decoder.
Image extract(const decoder::DecoderNet* net, const Image& check_image);

MetricReport recovery_quality(const decoder::DecoderNet* net, const Image& check_image,
                              const train::HiddenImage& hidden);

/// One row of the results table; `recovery` is empty for the clean scene.
struct MethodRow {
  std::string method;
  MetricReport rendering;
  std::optional<MetricReport> recovery;
};

/// Fixed-width table with scene-rendering PSNR/SSIM/LPIPS and hidden
/// recovery PSNR/SSIM columns. LPIPS is not computed and prints as n/a.
std::string format_table(const std::vector<MethodRow>& rows);

/// The image-domain bit-plane baseline on the clean check view. The cover is
/// the teacher's check render at the smallest integer upscale that holds the
/// payload.
struct LsbBaseline {
  int bits = 1;
  int scale = 1;
  Image cover;
  Image stego;
};

LsbBaseline make_lsb_baseline(const splat::Scene& teacher, const splat::Camera& check,
                              const train::HiddenImage& hidden, int bits = 1);

/// Extraction score against the 8-bit hidden image. A header that no longer
/// parses falls back to reading the payload at its known location.
struct LsbScore {
  bool header_ok = false;
  bool exact = false;
  MetricReport quality;
};
LsbScore score_lsb(const Image& stego, const train::HiddenImage& hidden, int bits);

/// The attack grid: blur sigma {0, 0.5, 1, 2, 4}, jpeg ratio {0.1, ..., 1.0}.
std::vector<attacks::AttackSpec> robustness_grid();

struct RobustnessRow {
  attacks::AttackSpec attack;
  MetricReport ours;
  MetricReport lsb;
};

std::vector<RobustnessRow> robustness_sweep(const decoder::DecoderNet* net, const Image& check_image,
                                            const LsbBaseline& lsb, const train::HiddenImage& hidden,
                                            const std::vector<attacks::AttackSpec>& grid);

/// Columns: attack, parameter, ours_psnr, ours_ssim, lsb_psnr, lsb_ssim.
void write_robustness_csv(std::ostream& out, const std::vector<RobustnessRow>& rows);

}  // namespace stegosplat::eval
