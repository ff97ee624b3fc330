#include "stegosplat/train/config.hpp"

#include <json.hpp>
#include <stdexcept>

#include "stegosplat/core/error.hpp"
#include "stegosplat/io/scene_io.hpp"

namespace stegosplat::train {

using nlohmann::json;

namespace {

template <class F>
void for_each_field(TrainConfig& c, F&& f) {
  f("steps_teacher", c.steps_teacher);
  f("steps_embed", c.steps_embed);
  f("lr_teacher", c.lr_teacher);
  f("lr_gaussian", c.lr_gaussian);
  f("lr_decoder", c.lr_decoder);
  f("lr_final_fraction", c.lr_final_fraction);
  f("lambda_pos", c.lambda_pos);
  f("lambda_neg", c.lambda_neg);
  f("lambda_kd", c.lambda_kd);
  f("check_view_index", c.check_view_index);
  f("no_decoder", c.no_decoder);
  f("no_consistency", c.no_consistency);
  f("no_grad_guidance", c.no_grad_guidance);
  f("seed", c.seed);
  f("decoder_width", c.decoder_width);
  f("kd_check_only", c.kd_check_only);
  f("log_every", c.log_every);
  f("disruption_budget", c.disruption_budget);
}

}  // namespace

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  need(steps_teacher >= 0 && steps_embed >= 0, "step counts must be non-negative");
  need(lr_teacher > 0 && lr_gaussian > 0 && lr_decoder > 0, "learning rates must be positive");
  need(lr_final_fraction > 0 && lr_final_fraction <= 1, "lr_final_fraction must be in (0, 1]");
  need(lambda_pos >= 0 && lambda_neg >= 0 && lambda_kd >= 0, "loss weights must be non-negative");
  need(check_view_index >= 0, "check_view_index must be non-negative");
  need(decoder_width >= 4, "decoder_width must be at least 4");
  need(log_every >= 1, "log_every must be positive");
  need(disruption_budget > 0, "disruption_budget must be positive");
}

std::string config_to_json(const TrainConfig& cfg) {
  json j = json::object();
  TrainConfig copy = cfg;
  for_each_field(copy, [&](const char* key, auto& value) { j[key] = value; });
  return j.dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text, TrainConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  std::size_t used = 0;
  for_each_field(base, [&](const char* key, auto& value) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    ++used;
    using V = std::decay_t<decltype(value)>;
    const bool ok = std::is_same_v<V, bool> ? it->is_boolean()
                    : std::is_floating_point_v<V> ? it->is_number()
                                                  : it->is_number_integer();
    if (!ok) throw FormatError(std::string("config: field '") + key + "' has the wrong type");
    value = it->template get<V>();
  });
  if (used != j.size()) {
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      TrainConfig probe;
      for_each_field(probe, [&](const char* k, auto&) { known = known || key == k; });
      if (!known) throw FormatError("config: unknown field '" + key + "'");
    }
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  return config_from_json(io::read_text(path), std::move(base));
}

}  // namespace stegosplat::train
