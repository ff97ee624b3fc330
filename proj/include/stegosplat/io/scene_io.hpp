#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stegosplat/splat/types.hpp"

namespace stegosplat::io {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kPoseFormatVersion = 1;

/// A camera set sharing intrinsics, with one designated check view.
struct PoseSet {
  std::vector<splat::Camera> cameras;
  std::size_t check_index = 0;

  /// Throws std::invalid_argument on an empty set, a bad check index or
  /// mismatched intrinsics.
  void validate() const;
  const splat::Camera& check() const { return cameras.at(check_index); }
};

// Scene JSON:
//   {"version": 1, "background": [r, g, b],
//    "gaussians": [{"pos": [3], "log_scale": [3], "quat": [4],
//                   "opacity_logit": x, "rgb": [3]}, ...]}
std::string scene_to_json(const splat::Scene& scene);
splat::Scene scene_from_json(const std::string& text);
void save_scene(const splat::Scene& scene, const std::filesystem::path& path);
splat::Scene load_scene(const std::filesystem::path& path);

// Pose JSON:
//   {"version": 1, "check_index": i,
//    "cameras": [{"fx", "fy", "cx", "cy", "width", "height",
//                 "rotation": [[3], [3], [3]], "translation": [3], "near"}, ...]}
std::string poses_to_json(const PoseSet& poses);
PoseSet poses_from_json(const std::string& text);
void save_poses(const PoseSet& poses, const std::filesystem::path& path);
PoseSet load_poses(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace stegosplat::io
