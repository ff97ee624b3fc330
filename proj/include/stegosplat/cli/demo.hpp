#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stegosplat/eval/evaluate.hpp"
#include "stegosplat/train/config.hpp"

namespace stegosplat::cli {

struct ToyScene {
  int gaussians = 200;
  int resolution = 64;
  int views = 20;
  double extent = 6.0;   // side of the cube holding the Gaussians
  double radius = 3.0;   // camera ring radius around the origin
};

struct DemoOptions {
  std::filesystem::path out_dir;
  ToyScene scene;
  train::TrainConfig cfg;
  bool ablations = true;
  std::ostream* progress = nullptr;
};

struct RunSummary {
  std::string name;
  metrics::MetricReport rendering;  // normal views vs ground truth
  metrics::MetricReport recovery;   // check view vs hidden image
  double max_check_disruption = 0.0;
  double final_identity_error = 0.0;  // mean |F(x) - x| over teacher normal views
};

struct DemoSummary {
  double teacher_train_psnr = 0.0;
  metrics::MetricReport teacher_rendering;
  RunSummary full;
  std::vector<RunSummary> ablations;
  std::vector<eval::RobustnessRow> robustness;
  eval::LsbScore lsb_clean;
  eval::LsbScore lsb_jpeg08;
  metrics::MetricReport ours_jpeg08;
  int lsb_scale = 1;
  double elapsed_seconds = 0.0;
  std::string table;
  std::map<std::string, std::string> files;  // role -> path
};

/// Generates the toy scene, fits the teacher, embeds the hidden image (plus
/// ablations) and evaluates everything, writing artifacts into out_dir.
DemoSummary run_demo(const DemoOptions& options);

std::string summary_json(const DemoSummary& summary);

}  // namespace stegosplat::cli
