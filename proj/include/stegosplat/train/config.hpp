#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace stegosplat::train {

struct TrainConfig {
  int steps_teacher = 3000;
  int steps_embed = 4000;
  double lr_teacher = 0.01;      // Adam base rate during teacher fitting
  double lr_gaussian = 1e-4;     // Adam base rate for the student's Gaussians
  double lr_decoder = 2e-3;      // decoder Adam rate
  double lr_final_fraction = 1.0;  // embedding rates follow a cosine from 1 down to this
  double lambda_pos = 1.0;
  double lambda_neg = 1.0;
  double lambda_kd = 1.0;
  int check_view_index = 0;
  bool no_decoder = false;
  bool no_consistency = false;
  bool no_grad_guidance = false;
  std::uint64_t seed = 1;

  int decoder_width = 16;
  bool kd_check_only = false;        // restrict the distillation pose to the check view
  int log_every = 100;               // recovery PSNR column cadence
  double disruption_budget = 0.05;   // mean |student - teacher| at the check view

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string config_to_json(const TrainConfig& cfg);

/// Applies the keys present in `text` on top of `base`. Unknown keys and
/// mistyped values throw FormatError.
TrainConfig config_from_json(const std::string& text, TrainConfig base = {});

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace stegosplat::train
