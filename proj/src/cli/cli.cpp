#include "stegosplat/cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <ostream>

#include "stegosplat/attacks/attacks.hpp"
#include "stegosplat/cli/demo.hpp"
#include "stegosplat/core/error.hpp"
#include "stegosplat/eval/evaluate.hpp"
#include "stegosplat/io/generate.hpp"
#include "stegosplat/io/image_io.hpp"
#include "stegosplat/splat/render.hpp"
#include "stegosplat/train/teacher.hpp"

namespace stegosplat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for bad input the operator can fix (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path existing(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  return path;
}

std::string target_name(std::size_t i) {
  std::ostringstream os;
  os << "view_" << std::setw(3) << std::setfill('0') << i << ".ppm";
  return os.str();
}

json metrics_json(const metrics::MetricReport& r) { return {{"psnr", r.psnr}, {"ssim", r.ssim}}; }

struct TrainFlags {
  train::TrainConfig cfg;
  std::string config_path;
  std::vector<std::string> ablate;

  void add_embed(CLI::App* app) {
    app->add_option("--steps", cfg.steps_embed, "embedding steps");
    app->add_option("--check-view", cfg.check_view_index, "check pose index");
    app->add_option("--lambda-pos", cfg.lambda_pos, "hidden-recovery loss weight");
    app->add_option("--lambda-neg", cfg.lambda_neg, "decoder identity loss weight");
    app->add_option("--lambda-kd", cfg.lambda_kd, "distillation loss weight");
    app->add_option("--lr-gaussian", cfg.lr_gaussian, "Gaussian learning rate");
    app->add_option("--lr-decoder", cfg.lr_decoder, "decoder learning rate");
    app->add_option("--lr-final-fraction", cfg.lr_final_fraction, "embedding rate multiplier reached at the last step");
    app->add_option("--decoder-width", cfg.decoder_width, "decoder base channel count");
    app->add_option("--log-every", cfg.log_every, "recovery PSNR logging cadence");
    app->add_flag("--kd-check-only", cfg.kd_check_only, "distill at the check pose only");
    app->add_option("--ablate", ablate, "decoder, consistency or grad (repeatable)")
        ->check(CLI::IsMember({"decoder", "consistency", "grad"}));
  }

  void add_common(CLI::App* app) {
    app->add_option("--seed", cfg.seed, "random seed");
    app->add_option("--config", config_path, "JSON config; overrides flags");
  }

  train::TrainConfig resolve() {
    for (const auto& a : ablate) {
      if (a == "decoder") cfg.no_decoder = true;
      if (a == "consistency") cfg.no_consistency = true;
      if (a == "grad") cfg.no_grad_guidance = true;
    }
    if (!config_path.empty()) cfg = train::load_config(existing(config_path), cfg);
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    return cfg;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool json_output = false;
  json summary = json::object();

  void note(const std::string& text) {
    if (!json_output) out << text << '\n';
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hide an image inside a Gaussian splat scene", "stegosplat"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx{out, err};
  app.add_flag("--json", ctx.json_output, "print a JSON summary on stdout");
  std::function<void()> action;

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic scene and a camera ring");
  struct {
    std::uint64_t seed = 1;
    cli::ToyScene toy;
    int check = 0;
    std::string scene, poses, targets, init, hidden;
  } g;
  gen->add_option("--seed", g.seed);
  gen->add_option("--gaussians", g.toy.gaussians)->check(CLI::PositiveNumber);
  gen->add_option("--extent", g.toy.extent)->check(CLI::PositiveNumber);
  gen->add_option("--views", g.toy.views)->check(CLI::Range(2, 100000));
  gen->add_option("--radius", g.toy.radius)->check(CLI::PositiveNumber);
  gen->add_option("--resolution", g.toy.resolution)->check(CLI::Range(8, 4096));
  gen->add_option("--check-view", g.check)->check(CLI::NonNegativeNumber);
  gen->add_option("--scene", g.scene, "output scene JSON")->required();
  gen->add_option("--poses", g.poses, "output pose JSON")->required();
  gen->add_option("--targets", g.targets, "directory for rendered target views");
  gen->add_option("--init", g.init, "output noisy copy of the scene (teacher start)");
  gen->add_option("--hidden", g.hidden, "output procedural 64x64 hidden image (PPM)");
  gen->callback([&] {
    action = [&] {
      const auto scene = io::generate_scene(g.seed, g.toy.gaussians, g.toy.extent);
      auto poses = io::generate_pose_ring(g.toy.views, g.toy.radius, splat::Vec3::Zero(), g.toy.resolution);
      if (static_cast<std::size_t>(g.check) >= poses.cameras.size()) throw UsageError("--check-view out of range");
      poses.check_index = static_cast<std::size_t>(g.check);
      io::save_scene(scene, g.scene);
      io::save_poses(poses, g.poses);
      json outputs = {{"scene", g.scene}, {"poses", g.poses}};
      if (!g.targets.empty()) {
        fs::create_directories(g.targets);
        for (std::size_t i = 0; i < poses.cameras.size(); ++i)
          io::write_ppm(splat::render(scene, poses.cameras[i]), fs::path(g.targets) / target_name(i));
        outputs["targets"] = g.targets;
      }
      if (!g.init.empty()) {
        io::save_scene(io::perturb_scene(scene, g.seed + 1, {0.05 * g.toy.extent, 0.1, 0.3, 0.3}), g.init);
        outputs["init"] = g.init;
      }
      if (!g.hidden.empty()) {
        io::write_ppm(io::generate_hidden_image(g.seed + 2), g.hidden);
        outputs["hidden"] = g.hidden;
      }
      ctx.summary["outputs"] = outputs;
      ctx.summary["metrics"] = {{"gaussians", scene.gaussians.size()}, {"views", poses.cameras.size()}};
      ctx.note("wrote " + g.scene + " and " + g.poses);
    };
  });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "fit a teacher scene to target views");
  TrainFlags pf;
  std::string pre_init, pre_poses, pre_targets, pre_out, pre_log;
  pf.add_common(pre);
  pre->add_option("--steps", pf.cfg.steps_teacher, "teacher steps");
  pre->add_option("--lr", pf.cfg.lr_teacher, "teacher learning rate");
  pre->add_option("--init", pre_init, "initial scene JSON")->required();
  pre->add_option("--poses", pre_poses, "pose JSON")->required();
  pre->add_option("--targets", pre_targets, "directory of view_NNN.ppm targets")->required();
  pre->add_option("--out", pre_out, "output teacher scene JSON")->required();
  pre->add_option("--log", pre_log, "CSV loss log");
  pre->callback([&] {
    action = [&] {
      const auto cfg = pf.resolve();
      const auto init = io::load_scene(existing(pre_init));
      const auto poses = io::load_poses(existing(pre_poses));
      std::vector<train::View> views;
      for (std::size_t i = 0; i < poses.cameras.size(); ++i)
        views.push_back({poses.cameras[i], io::read_ppm(existing((fs::path(pre_targets) / target_name(i)).string()))});
      const auto res = train::pretrain_teacher(init, views, cfg);
      io::save_scene(res.scene, pre_out);
      if (!pre_log.empty()) {
        std::ofstream log(pre_log);
        log << "step,loss\n" << std::setprecision(9);
        for (std::size_t i = 0; i < res.loss.size(); ++i) log << i << ',' << res.loss[i] << '\n';
      }
      ctx.summary["outputs"] = {{"teacher", pre_out}};
      ctx.summary["metrics"] = {{"train_psnr", res.train_psnr}};
      std::ostringstream msg;
      msg << "teacher train PSNR " << std::fixed << std::setprecision(2) << res.train_psnr << " dB";
      ctx.note(msg.str());
    };
  });

  // embed
  auto* emb = app.add_subcommand("embed", "train a student scene and decoder carrying the hidden image");
  TrainFlags ef;
  std::string emb_teacher, emb_poses, emb_hidden, emb_scene, emb_decoder, emb_log;
  ef.add_common(emb);
  ef.add_embed(emb);
  emb->add_option("--teacher", emb_teacher, "teacher scene JSON")->required();
  emb->add_option("--poses", emb_poses, "pose JSON")->required();
  emb->add_option("--hidden", emb_hidden, "hidden image (PPM)")->required();
  emb->add_option("--out-scene", emb_scene, "output student scene JSON")->required();
  emb->add_option("--out-decoder", emb_decoder, "output decoder checkpoint");
  emb->add_option("--log", emb_log, "CSV training log");
  emb->callback([&] {
    action = [&] {
      auto cfg = ef.resolve();
      const auto teacher = io::load_scene(existing(emb_teacher));
      auto poses = io::load_poses(existing(emb_poses));
      if (emb->count("--check-view") == 0 && ef.config_path.empty())
        cfg.check_view_index = static_cast<int>(poses.check_index);
      const train::HiddenImage hidden(io::read_ppm(existing(emb_hidden)));
      const auto res = train::train_embed(teacher, poses, hidden, cfg);
      io::save_scene(res.student, emb_scene);
      json outputs = {{"student", emb_scene}};
      if (!emb_decoder.empty() && !cfg.no_decoder) {
        decoder::save_checkpoint(res.decoder, emb_decoder);
        outputs["decoder"] = emb_decoder;
      }
      if (!emb_log.empty()) {
        std::ofstream log(emb_log);
        train::write_log_csv(log, res.log);
        outputs["log"] = emb_log;
      }
      poses.check_index = static_cast<std::size_t>(cfg.check_view_index);
      const Image check = splat::render(res.student, poses.check());
      const auto rec = eval::recovery_quality(cfg.no_decoder ? nullptr : &res.decoder, check, hidden);
      ctx.summary["outputs"] = outputs;
      ctx.summary["metrics"] = {{"recovery", metrics_json(rec)},
                                {"max_check_disruption", res.max_check_disruption}};
      std::ostringstream msg;
      msg << "check-view recovery PSNR " << std::fixed << std::setprecision(2) << rec.psnr << " dB";
      ctx.note(msg.str());
    };
  });

  // render
  auto* ren = app.add_subcommand("render", "render a scene at one pose to PPM");
  std::string ren_scene, ren_poses, ren_out;
  int ren_index = -1;
  ren->add_option("--scene", ren_scene)->required();
  ren->add_option("--poses", ren_poses)->required();
  ren->add_option("--index", ren_index, "pose index (default: the check pose)");
  ren->add_option("--out", ren_out)->required();
  ren->callback([&] {
    action = [&] {
      const auto scene = io::load_scene(existing(ren_scene));
      const auto poses = io::load_poses(existing(ren_poses));
      const std::size_t idx = ren_index < 0 ? poses.check_index : static_cast<std::size_t>(ren_index);
      if (idx >= poses.cameras.size()) throw UsageError("--index out of range");
      io::write_ppm(splat::render(scene, poses.cameras[idx]), ren_out);
      ctx.summary["outputs"] = {{"image", ren_out}};
      ctx.note("wrote " + ren_out);
    };
  });

  // recover
  auto* rec = app.add_subcommand("recover", "run the decoder on an image");
  std::string rec_decoder, rec_image, rec_out, rec_ref;
  rec->add_option("--decoder", rec_decoder)->required();
  rec->add_option("--image", rec_image)->required();
  rec->add_option("--out", rec_out)->required();
  rec->add_option("--reference", rec_ref, "hidden image to score against");
  rec->callback([&] {
    action = [&] {
      const auto net = decoder::load_checkpoint(existing(rec_decoder));
      const Image img = io::read_ppm(existing(rec_image));
      const Image result = train::recover(net, img);
      io::write_ppm(result, rec_out);
      ctx.summary["outputs"] = {{"image", rec_out}};
      if (!rec_ref.empty()) {
        const train::HiddenImage ref(io::read_ppm(existing(rec_ref)));
        const auto m = metrics::compare(result, ref.at_resolution(result.width(), result.height()));
        ctx.summary["metrics"] = metrics_json(m);
        std::ostringstream msg;
        msg << "PSNR " << std::fixed << std::setprecision(2) << m.psnr << " dB, SSIM " << std::setprecision(4) << m.ssim;
        ctx.note(msg.str());
      } else {
        ctx.note("wrote " + rec_out);
      }
    };
  });

  // attack
  auto* att = app.add_subcommand("attack", "apply blur:<sigma> or jpeg:<ratio> to an image");
  std::string att_image, att_spec, att_out;
  att->add_option("--image", att_image)->required();
  att->add_option("--attack", att_spec, "blur:<sigma> or jpeg:<ratio>")->required();
  att->add_option("--out", att_out)->required();
  att->callback([&] {
    action = [&] {
      attacks::AttackSpec spec;
      try {
        spec = attacks::parse_attack(att_spec);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const Image img = io::read_ppm(existing(att_image));
      const Image result = attacks::apply(spec, img);
      io::write_ppm(result, att_out);
      ctx.summary["outputs"] = {{"image", att_out}};
      ctx.summary["metrics"] = metrics_json(metrics::compare(result, img));
      ctx.note("wrote " + att_out + " (" + attacks::describe(spec) + ")");
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "score a student scene and decoder");
  std::string ev_teacher, ev_student, ev_decoder, ev_poses, ev_targets, ev_hidden, ev_report, ev_sweep;
  ev->add_option("--teacher", ev_teacher)->required();
  ev->add_option("--student", ev_student)->required();
  ev->add_option("--decoder", ev_decoder, "decoder checkpoint (omit for the decoder-free ablation)");
  ev->add_option("--poses", ev_poses)->required();
  ev->add_option("--targets", ev_targets, "directory of view_NNN.ppm ground truth")->required();
  ev->add_option("--hidden", ev_hidden)->required();
  ev->add_option("--report", ev_report, "write the results table here");
  ev->add_option("--robustness", ev_sweep, "write the attack sweep CSV here");
  ev->callback([&] {
    action = [&] {
      const auto teacher = io::load_scene(existing(ev_teacher));
      const auto student = io::load_scene(existing(ev_student));
      const auto poses = io::load_poses(existing(ev_poses));
      std::vector<Image> targets;
      for (std::size_t i = 0; i < poses.cameras.size(); ++i)
        targets.push_back(io::read_ppm(existing((fs::path(ev_targets) / target_name(i)).string())));
      const train::HiddenImage hidden(io::read_ppm(existing(ev_hidden)));
      std::optional<decoder::DecoderNet> net;
      if (!ev_decoder.empty()) net = decoder::load_checkpoint(existing(ev_decoder));
      const decoder::DecoderNet* np = net ? &*net : nullptr;

      const Image check = splat::render(student, poses.check());
      const auto teacher_q = eval::rendering_quality(teacher, poses, targets);
      const auto student_q = eval::rendering_quality(student, poses, targets);
      const auto recovery = eval::recovery_quality(np, check, hidden);
      const auto lsb = eval::make_lsb_baseline(teacher, poses.check(), hidden, 1);
      const auto lsb_clean = eval::score_lsb(lsb.stego, hidden, lsb.bits);
      const auto rows = eval::robustness_sweep(np, check, lsb, hidden, eval::robustness_grid());
      const std::string table = eval::format_table({{"teacher", teacher_q, std::nullopt},
                                                    {"ours", student_q, recovery},
                                                    {"lsb (k=1)", teacher_q, lsb_clean.quality}});
      json outputs = json::object();
      if (!ev_report.empty()) {
        io::write_text(ev_report, table);
        outputs["report"] = ev_report;
      }
      if (!ev_sweep.empty()) {
        std::ofstream csv(ev_sweep);
        eval::write_robustness_csv(csv, rows);
        outputs["robustness"] = ev_sweep;
      }
      ctx.summary["outputs"] = outputs;
      ctx.summary["metrics"] = {{"teacher_rendering", metrics_json(teacher_q)},
                                {"rendering", metrics_json(student_q)},
                                {"psnr_drop", teacher_q.psnr - student_q.psnr},
                                {"recovery", metrics_json(recovery)}};
      if (!ctx.json_output) out << table;
    };
  });

  // demo
  auto* demo = app.add_subcommand("demo", "end-to-end toy run: gen, pretrain, embed, eval");
  TrainFlags df;
  DemoOptions dopt;
  std::string demo_out = "demo_out";
  bool no_ablations = false, quiet = false;
  df.add_common(demo);
  df.add_embed(demo);
  demo->add_option("--steps-teacher", df.cfg.steps_teacher);
  demo->add_option("--lr-teacher", df.cfg.lr_teacher);
  demo->add_option("--out", demo_out, "output directory");
  demo->add_option("--gaussians", dopt.scene.gaussians)->check(CLI::PositiveNumber);
  demo->add_option("--views", dopt.scene.views)->check(CLI::Range(2, 100000));
  demo->add_option("--resolution", dopt.scene.resolution)->check(CLI::Range(8, 4096));
  demo->add_option("--extent", dopt.scene.extent)->check(CLI::PositiveNumber);
  demo->add_option("--radius", dopt.scene.radius)->check(CLI::PositiveNumber);
  demo->add_flag("--no-ablations", no_ablations);
  demo->add_flag("--quiet", quiet, "no progress messages on stderr");
  demo->callback([&] {
    action = [&] {
      dopt.cfg = df.resolve();
      dopt.out_dir = demo_out;
      dopt.ablations = !no_ablations;
      dopt.progress = quiet ? nullptr : &err;
      const DemoSummary s = run_demo(dopt);
      if (ctx.json_output) {
        out << summary_json(s);
      } else {
        out << s.table;
      }
      ctx.summary = nullptr;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "stegosplat: " << msg << '\n';
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto fail = [&](int code, const std::string& what) {
    std::string msg = what;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "stegosplat " << command << ": " << msg << '\n';
    return code;
  };
  try {
    action();
  } catch (const UsageError& e) {
    return fail(kExitUsage, e.what());
  } catch (const FormatError& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
  if (ctx.json_output && !ctx.summary.is_null()) {
    json j = {{"schema_version", 1}, {"command", command}};
    for (auto& [k, v] : ctx.summary.items()) j[k] = v;
    if (!j.contains("outputs")) j["outputs"] = json::object();
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace stegosplat::cli
