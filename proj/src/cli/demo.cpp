#include "stegosplat/cli/demo.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>

#include "stegosplat/attacks/attacks.hpp"
#include "stegosplat/io/generate.hpp"
#include "stegosplat/io/image_io.hpp"
#include "stegosplat/splat/render.hpp"
#include "stegosplat/train/teacher.hpp"

namespace stegosplat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_csv(const fs::path& path, const std::vector<train::StepLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  train::write_log_csv(out, log);
}

double identity_error(const decoder::DecoderNet* net, const io::PoseSet& poses,
                      const std::vector<Image>& teacher_views) {
  if (net == nullptr) return 0.0;
  double total = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < teacher_views.size(); ++i) {
    if (i == poses.check_index) continue;
    total += mean_abs_diff(train::recover(*net, teacher_views[i]), teacher_views[i]);
    ++n;
  }
  return total / n;
}

json report_json(const metrics::MetricReport& r) { return {{"psnr", r.psnr}, {"ssim", r.ssim}}; }

json run_json(const RunSummary& r, const DemoSummary& s) {
  return {{"name", r.name},
          {"rendering", report_json(r.rendering)},
          {"recovery", report_json(r.recovery)},
          {"psnr_drop", s.teacher_rendering.psnr - r.rendering.psnr},
          {"max_check_disruption", r.max_check_disruption},
          {"identity_error", r.final_identity_error}};
}

}  // namespace

DemoSummary run_demo(const DemoOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  std::ostream* log = opt.progress;
  auto say = [&](const std::string& msg) {
    if (log != nullptr) *log << msg << std::endl;
  };
  fs::create_directories(opt.out_dir);
  DemoSummary s;
  auto file = [&](const std::string& role, const fs::path& rel) {
    s.files[role] = (opt.out_dir / rel).string();
    return opt.out_dir / rel;
  };

  train::TrainConfig cfg = opt.cfg;
  cfg.validate();
  const std::uint64_t seed = cfg.seed;
  const ToyScene& ts = opt.scene;

  const splat::Scene gt = io::generate_scene(seed, ts.gaussians, ts.extent);
  io::PoseSet poses = io::generate_pose_ring(ts.views, ts.radius, splat::Vec3::Zero(), ts.resolution);
  if (static_cast<std::size_t>(cfg.check_view_index) >= poses.cameras.size()) {
    throw std::invalid_argument("check_view_index out of range");
  }
  poses.check_index = static_cast<std::size_t>(cfg.check_view_index);
  io::save_scene(gt, file("ground_truth", "ground_truth.json"));
  io::save_poses(poses, file("poses", "poses.json"));

  std::vector<train::View> views;
  std::vector<Image> targets;
  for (const auto& cam : poses.cameras) {
    targets.push_back(splat::render(gt, cam));
    views.push_back({cam, targets.back()});
  }

  // The teacher starts from a noisy copy of the ground truth.
  const io::Perturbation noise{0.05 * ts.extent, 0.1, 0.3, 0.3};
  const splat::Scene init = io::perturb_scene(gt, seed + 1, noise);
  say("fitting teacher (" + std::to_string(cfg.steps_teacher) + " steps)");
  const train::TeacherResult teacher = train::pretrain_teacher(init, views, cfg);
  s.teacher_train_psnr = teacher.train_psnr;
  io::save_scene(teacher.scene, file("teacher", "teacher.json"));
  {
    std::ofstream out(file("teacher_log", "teacher_log.csv"));
    out << "step,loss\n" << std::setprecision(9);
    for (std::size_t i = 0; i < teacher.loss.size(); ++i) out << i << ',' << teacher.loss[i] << '\n';
  }
  s.teacher_rendering = eval::rendering_quality(teacher.scene, poses, targets);
  std::vector<Image> teacher_views;
  for (const auto& cam : poses.cameras) teacher_views.push_back(splat::render(teacher.scene, cam));

  const train::HiddenImage hidden(io::generate_hidden_image(seed + 2));
  io::write_ppm(hidden.image(), file("hidden", "hidden.ppm"));
  const splat::Camera& check = poses.check();

  auto embed = [&](const std::string& name, train::TrainConfig c, const fs::path& dir) {
    say("embedding: " + name + " (" + std::to_string(c.steps_embed) + " steps)");
    fs::create_directories(opt.out_dir / dir);
    const train::EmbedResult res = train::train_embed(teacher.scene, poses, hidden, c);
    const std::string key = name == "full" ? "" : name + "_";
    io::save_scene(res.student, file(key + "student", dir / "student.json"));
    write_csv(file(key + "embed_log", dir / "embed_log.csv"), res.log);
    const decoder::DecoderNet* net = c.no_decoder ? nullptr : &res.decoder;
    if (net != nullptr) decoder::save_checkpoint(res.decoder, file(key + "decoder", dir / "decoder.bin"));
    const Image check_img = splat::render(res.student, check);
    io::write_ppm(check_img, file(key + "check_render", dir / "check_render.ppm"));
    io::write_ppm(eval::extract(net, check_img), file(key + "recovered", dir / "recovered.ppm"));

    RunSummary r;
    r.name = name;
    r.rendering = eval::rendering_quality(res.student, poses, targets);
    r.recovery = eval::recovery_quality(net, check_img, hidden);
    r.max_check_disruption = res.max_check_disruption;
    r.final_identity_error = identity_error(net, poses, teacher_views);
    return std::make_pair(r, res);
  };

  auto [full, full_res] = embed("full", cfg, ".");
  s.full = full;
  const Image check_img = splat::render(full_res.student, check);

  if (opt.ablations) {
    const std::pair<const char*, bool train::TrainConfig::*> variants[] = {
        {"no_consistency", &train::TrainConfig::no_consistency},
        {"no_grad", &train::TrainConfig::no_grad_guidance},
        {"no_decoder", &train::TrainConfig::no_decoder},
    };
    for (const auto& [name, flag] : variants) {
      train::TrainConfig c = cfg;
      c.*flag = true;
      s.ablations.push_back(embed(name, c, fs::path("ablations") / name).first);
    }
  }

  say("evaluating");
  const eval::LsbBaseline lsb = eval::make_lsb_baseline(teacher.scene, check, hidden, 1);
  s.lsb_scale = lsb.scale;
  io::write_ppm(lsb.stego, file("lsb_stego", "lsb_stego.ppm"));
  s.lsb_clean = eval::score_lsb(lsb.stego, hidden, lsb.bits);
  s.lsb_jpeg08 = eval::score_lsb(attacks::jpeg_compress(lsb.stego, 0.8), hidden, lsb.bits);
  s.ours_jpeg08 = eval::recovery_quality(&full_res.decoder, attacks::jpeg_compress(check_img, 0.8), hidden);
  s.robustness = eval::robustness_sweep(&full_res.decoder, check_img, lsb, hidden, eval::robustness_grid());
  {
    std::ofstream out(file("robustness", "robustness.csv"));
    eval::write_robustness_csv(out, s.robustness);
  }

  std::vector<eval::MethodRow> rows;
  rows.push_back({"teacher", s.teacher_rendering, std::nullopt});
  rows.push_back({"ours", s.full.rendering, s.full.recovery});
  for (const RunSummary& r : s.ablations) rows.push_back({r.name, r.rendering, r.recovery});
  rows.push_back({"lsb (k=1)", s.teacher_rendering, s.lsb_clean.quality});
  rows.push_back({"lsb, jpeg 0.8", s.teacher_rendering, s.lsb_jpeg08.quality});
  rows.push_back({"ours, jpeg 0.8", s.full.rendering, s.ours_jpeg08});
  s.table = eval::format_table(rows);
  io::write_text(file("report", "report.txt"), s.table);

  s.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::write_text(file("summary", "summary.json"), summary_json(s));
  return s;
}

std::string summary_json(const DemoSummary& s) {
  json ablations = json::array();
  for (const RunSummary& r : s.ablations) ablations.push_back(run_json(r, s));
  json robustness = json::array();
  for (const auto& row : s.robustness) {
    robustness.push_back({{"attack", attacks::describe(row.attack)},
                          {"ours", report_json(row.ours)},
                          {"lsb", report_json(row.lsb)}});
  }
  json files = json::object();
  for (const auto& [role, path] : s.files) files[role] = path;
  json j = {{"schema_version", 1},
            {"command", "demo"},
            {"teacher", {{"train_psnr", s.teacher_train_psnr}, {"rendering", report_json(s.teacher_rendering)}}},
            {"full", run_json(s.full, s)},
            {"ablations", ablations},
            {"robustness", robustness},
            {"lsb",
             {{"scale", s.lsb_scale},
              {"clean_exact", s.lsb_clean.exact},
              {"clean", report_json(s.lsb_clean.quality)},
              {"jpeg08_header_ok", s.lsb_jpeg08.header_ok},
              {"jpeg08", report_json(s.lsb_jpeg08.quality)}}},
            {"ours_jpeg08", report_json(s.ours_jpeg08)},
            {"elapsed_seconds", s.elapsed_seconds},
            {"outputs", files}};
  return j.dump(2) + "\n";
}

}  // namespace stegosplat::cli
