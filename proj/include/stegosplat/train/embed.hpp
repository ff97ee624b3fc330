#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stegosplat/autodiff/adam.hpp"
#include "stegosplat/core/image.hpp"
#include "stegosplat/core/rng.hpp"
#include "stegosplat/decoder/decoder.hpp"
#include "stegosplat/io/scene_io.hpp"
#include "stegosplat/splat/types.hpp"
#include "stegosplat/train/config.hpp"
#include "stegosplat/train/scene_params.hpp"

namespace stegosplat::train {

/// The secret image, held at a fixed 64x64 (other sizes are resampled on
/// ingest). Values must lie in [0, 1].
class HiddenImage {
 public:
  static constexpr int kSize = 64;

  explicit HiddenImage(const Image& img);

  const Image& image() const { return image_; }
  /// Bilinear resample to a render resolution.
  Image at_resolution(int width, int height) const;

 private:
  Image image_;
};

struct StepLog {
  int step = 0;
  double l_kd = 0.0;
  double l_d_pos = 0.0;
  double l_d_neg = 0.0;
  double mean_w = 1.0;
  std::optional<double> psnr_check_recovery;
  double check_disruption = 0.0;  // mean |student - teacher| at the check view, before the step
  std::vector<double> weights;    // w_i per decoder block (empty without a decoder)
};

/// Optimizer state carried between steps.
struct EmbedState {
  explicit EmbedState(const TrainConfig& cfg) : gaussians(cfg.lr_gaussian) {}
  SceneOptimizer gaussians;
  autodiff::AdamState decoder;
};

struct StepOptions {
  int step = 0;  // recorded in the log and in error messages
  bool log_recovery = false;
  /// Pre-rendered teacher images for the three poses; rendered on demand when null.
  const Image* teacher_m = nullptr;
  const Image* teacher_check = nullptr;
  const Image* teacher_normal = nullptr;
  /// Test hook: replaces the computed per-block weights.
  std::optional<std::vector<double>> forced_weights;
};

/// One joint update of the student's Gaussians and the decoder.
StepLog embed_step(splat::Scene& student, const splat::Scene& teacher, decoder::DecoderNet& decoder,
                   EmbedState& state, const splat::Camera& pose_m, const splat::Camera& check,
                   const splat::Camera& normal, const HiddenImage& hidden, const TrainConfig& cfg,
                   const StepOptions& options = {});

struct EmbedResult {
  splat::Scene student;
  decoder::DecoderNet decoder;
  std::vector<StepLog> log;
  double max_check_disruption = 0.0;
};

/// Pose choice for one step: the distillation pose cycles round-robin over
/// all poses (or stays on the check pose), the normal pose is drawn
/// uniformly from the others.
struct PoseSchedule {
  PoseSchedule(const io::PoseSet& poses, const TrainConfig& cfg);
  std::size_t distill(int step) const;
  std::size_t normal();

 private:
  std::size_t count_;
  std::size_t check_;
  bool check_only_;
  Rng rng_;
};

/// Multiplier on both embedding learning rates at `step`: a half cosine from
/// 1 to cfg.lr_final_fraction over steps_embed.
double lr_factor(const TrainConfig& cfg, int step);

using EmbedCallback = std::function<void(const StepLog&)>;

EmbedResult train_embed(const splat::Scene& teacher, const io::PoseSet& poses,
                        const HiddenImage& hidden, const TrainConfig& cfg,
                        const EmbedCallback& progress = {});

/// Decoder output for a (check-view) render.
Image recover(const decoder::DecoderNet& decoder, const Image& image);

/// Columns: step, L_kd, L_d_pos, L_d_neg, mean_w, psnr_check_recovery.
void write_log_csv(std::ostream& out, const std::vector<StepLog>& log);

/// Trains the decoder alone towards identity on `images` (mean L1).
/// Returns the final-step loss.
double train_identity(decoder::DecoderNet& net, const std::vector<Image>& images, int steps, double lr);

}  // namespace stegosplat::train
