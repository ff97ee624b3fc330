#include "stegosplat/io/scene_io.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "stegosplat/core/error.hpp"

namespace stegosplat::io {

using nlohmann::json;
using splat::Camera;
using splat::Gaussian;
using splat::Scene;

namespace {

template <class V>
json vec_json(const V& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <class V>
V vec_from(const json& j, const char* key) {
  const json& a = j.at(key);
  V v;
  if (!a.is_array() || a.size() != static_cast<std::size_t>(v.size())) {
    throw FormatError(std::string("field '") + key + "' must be an array of " + std::to_string(v.size()) + " numbers");
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = a[static_cast<std::size_t>(i)].template get<double>();
  return v;
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

void PoseSet::validate() const {
  if (cameras.empty()) throw std::invalid_argument("pose set is empty");
  if (check_index >= cameras.size()) throw std::invalid_argument("check index out of range");
  const Camera& c0 = cameras.front();
  for (const Camera& c : cameras) {
    c.validate();
    if (c.fx != c0.fx || c.fy != c0.fy || c.cx != c0.cx || c.cy != c0.cy || c.width != c0.width ||
        c.height != c0.height) {
      throw std::invalid_argument("pose set cameras must share intrinsics");
    }
  }
}

std::string scene_to_json(const Scene& scene) {
  json j;
  j["version"] = kSceneFormatVersion;
  j["background"] = vec_json(scene.background);
  json gs = json::array();
  for (const Gaussian& g : scene.gaussians) {
    gs.push_back({{"pos", vec_json(g.position)},
                  {"log_scale", vec_json(g.log_scale)},
                  {"quat", vec_json(g.rotation)},
                  {"opacity_logit", g.opacity_logit},
                  {"rgb", vec_json(g.rgb)}});
  }
  j["gaussians"] = std::move(gs);
  return j.dump(1) + "\n";
}

Scene scene_from_json(const std::string& text) {
  const json j = parse(text, "scene");
  return guarded("scene", [&] {
    if (j.at("version").get<int>() != kSceneFormatVersion) throw FormatError("scene: unsupported version");
    Scene s;
    s.background = vec_from<splat::Vec3>(j, "background");
    for (const json& g : j.at("gaussians")) {
      Gaussian out;
      out.position = vec_from<splat::Vec3>(g, "pos");
      out.log_scale = vec_from<splat::Vec3>(g, "log_scale");
      out.rotation = vec_from<splat::Vec4>(g, "quat");
      out.opacity_logit = g.at("opacity_logit").get<double>();
      out.rgb = vec_from<splat::Vec3>(g, "rgb");
      if (!(out.rotation.norm() > 0.0)) throw FormatError("scene: zero quaternion");
      s.gaussians.push_back(out);
    }
    return s;
  });
}

std::string poses_to_json(const PoseSet& poses) {
  json cams = json::array();
  for (const Camera& c : poses.cameras) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back(vec_json(splat::Vec3(c.rotation.row(r).transpose())));
    cams.push_back({{"fx", c.fx},
                    {"fy", c.fy},
                    {"cx", c.cx},
                    {"cy", c.cy},
                    {"width", c.width},
                    {"height", c.height},
                    {"rotation", rot},
                    {"translation", vec_json(c.translation)},
                    {"near", c.near}});
  }
  json j;
  j["version"] = kPoseFormatVersion;
  j["check_index"] = poses.check_index;
  j["cameras"] = std::move(cams);
  return j.dump(1) + "\n";
}

PoseSet poses_from_json(const std::string& text) {
  const json j = parse(text, "poses");
  PoseSet p = guarded("poses", [&] {
    if (j.at("version").get<int>() != kPoseFormatVersion) throw FormatError("poses: unsupported version");
    PoseSet out;
    out.check_index = j.at("check_index").get<std::size_t>();
    for (const json& c : j.at("cameras")) {
      Camera cam;
      cam.fx = c.at("fx").get<double>();
      cam.fy = c.at("fy").get<double>();
      cam.cx = c.at("cx").get<double>();
      cam.cy = c.at("cy").get<double>();
      cam.width = c.at("width").get<int>();
      cam.height = c.at("height").get<int>();
      const json& rot = c.at("rotation");
      if (!rot.is_array() || rot.size() != 3) throw FormatError("poses: rotation must be 3x3");
      for (int r = 0; r < 3; ++r) {
        const json row = {{"r", rot[static_cast<std::size_t>(r)]}};
        cam.rotation.row(r) = vec_from<splat::Vec3>(row, "r").transpose();
      }
      cam.translation = vec_from<splat::Vec3>(c, "translation");
      cam.near = c.at("near").get<double>();
      out.cameras.push_back(cam);
    }
    return out;
  });
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("poses: ") + e.what());
  }
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { write_text(path, scene_to_json(scene)); }
Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_text(path)); }
void save_poses(const PoseSet& poses, const std::filesystem::path& path) { write_text(path, poses_to_json(poses)); }
PoseSet load_poses(const std::filesystem::path& path) { return poses_from_json(read_text(path)); }

}  // namespace stegosplat::io
