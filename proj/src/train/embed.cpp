#include "stegosplat/train/embed.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "stegosplat/core/error.hpp"
#include "stegosplat/metrics/metrics.hpp"
#include "stegosplat/splat/render.hpp"

namespace stegosplat::train {

namespace ad = autodiff;
using ad::Var;
using decoder::DecoderNet;
using decoder::Tensor;
using splat::Camera;
using splat::Scene;

HiddenImage::HiddenImage(const Image& img) {
  if (img.empty()) throw std::invalid_argument("hidden image is empty");
  for (double v : img.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("hidden image values must lie in [0, 1]");
  }
  image_ = (img.width() == kSize && img.height() == kSize) ? img : resize_bilinear(img, kSize, kSize);
}

Image HiddenImage::at_resolution(int width, int height) const {
  if (width == kSize && height == kSize) return image_;
  return resize_bilinear(image_, width, height);
}

namespace {

struct L1 {
  double value = 0.0;
  Image grad;  // d mean|a - b| / da, scaled by `scale`
};

L1 l1_with_grad(const Image& a, const Image& b, double scale) {
  require_same_shape(a, b, "l1");
  L1 out{0.0, Image(a.width(), a.height())};
  const auto pa = a.pixels(), pb = b.pixels();
  auto g = out.grad.pixels();
  const double n = static_cast<double>(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    out.value += std::abs(d);
    g[i] = d > 0.0 ? scale / n : (d < 0.0 ? -scale / n : 0.0);
  }
  out.value /= n;
  return out;
}

void require_finite(double v, const char* what, int step) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("embed: non-finite ") + what + " at step " + std::to_string(step));
  }
}

struct DecoderPass {
  double loss = 0.0;
  decoder::LayerGradients grads;
  Tensor input_grad;
  Tensor output;
};

// F(input) against `target` (or against the input itself when target is
// null). Gradients are only formed when `backward` is set.
DecoderPass run_decoder(const DecoderNet& net, const Image& input, const Image* target, bool input_grad,
                        bool backward) {
  ad::Tape<float> tape;
  const Var x = tape.leaf(decoder::image_to_tensor(input), input_grad);
  const auto graph = decoder::record_decoder(tape, net, x);
  const Var y = target != nullptr ? tape.leaf(decoder::image_to_tensor(*target), false) : x;
  const Var loss = ad::l1_loss<float>(tape, graph.output, y);
  DecoderPass pass;
  pass.loss = tape.value(loss)[0];
  pass.output = tape.value(graph.output);
  if (!backward) return pass;
  const auto grads = tape.backward(loss);
  pass.grads = decoder::collect_gradients(grads, graph, net);
  if (input_grad) pass.input_grad = grads.at(x);
  return pass;
}

void decoder_update(DecoderNet& net, const decoder::LayerGradients& grads, ad::AdamState& state, double lr) {
  std::vector<Tensor> params, g;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& b = net.blocks()[i];
    params.push_back(b.weight);
    params.push_back(b.bias);
    const auto split = grads[i].begin() + static_cast<std::ptrdiff_t>(b.weight.size());
    g.emplace_back(b.weight.shape(), std::vector<float>(grads[i].begin(), split));
    g.emplace_back(b.bias.shape(), std::vector<float>(split, grads[i].end()));
  }
  ad::adam_step<float>(params, g, state, lr);
  for (std::size_t i = 0; i < net.size(); ++i) {
    net.blocks()[i].weight = std::move(params[2 * i]);
    net.blocks()[i].bias = std::move(params[2 * i + 1]);
  }
}

}  // namespace

StepLog embed_step(Scene& student, const Scene& teacher, DecoderNet& net, EmbedState& state,
                   const Camera& pose_m, const Camera& check, const Camera& normal,
                   const HiddenImage& hidden, const TrainConfig& cfg, const StepOptions& options) {
  StepLog log;
  log.step = options.step;

  const Image student_m = splat::render(student, pose_m);
  auto teacher_view = [&](const Image* cached, const Camera& cam) {
    return cached != nullptr ? *cached : splat::render(teacher, cam);
  };
  const Image teacher_m = teacher_view(options.teacher_m, pose_m);
  const L1 kd = l1_with_grad(student_m, teacher_m, cfg.lambda_kd);
  log.l_kd = kd.value;
  require_finite(kd.value, "L_kd", options.step);

  const Image student_c = splat::render(student, check);
  log.check_disruption = mean_abs_diff(student_c, teacher_view(options.teacher_check, check));
  const Image target = hidden.at_resolution(check.width, check.height);

  std::vector<splat::GaussianGrad> grads = splat::render_vjp(student, pose_m, kd.grad);

  if (cfg.no_decoder) {
    const L1 pos = l1_with_grad(student_c, target, cfg.lambda_pos);
    log.l_d_pos = pos.value;
    require_finite(pos.value, "L_d_pos", options.step);
    if (options.log_recovery) log.psnr_check_recovery = metrics::psnr(student_c, target);
    axpy(grads, 1.0, splat::render_vjp(student, check, pos.grad));
    state.gaussians.step(student, grads);
    return log;
  }

  decoder::require_decodable(check.width, check.height);
  const Image teacher_n = teacher_view(options.teacher_normal, normal);
  const DecoderPass pos = run_decoder(net, student_c, &target, true, true);
  const bool consistency = !cfg.no_consistency;
  const DecoderPass neg = run_decoder(net, teacher_n, nullptr, false, consistency);
  log.l_d_pos = pos.loss;
  log.l_d_neg = neg.loss;
  require_finite(pos.loss, "L_d_pos", options.step);
  require_finite(neg.loss, "L_d_neg", options.step);
  if (options.log_recovery) log.psnr_check_recovery = metrics::psnr(clamp01(decoder::tensor_to_image(pos.output)), target);

  if (consistency && !cfg.no_grad_guidance) {
    log.weights = decoder::per_layer_cosine(pos.grads, neg.grads).weight;
  } else {
    log.weights.assign(net.size(), 1.0);
  }
  if (options.forced_weights) {
    if (options.forced_weights->size() != net.size()) throw ShapeError("forced_weights: wrong layer count");
    log.weights = *options.forced_weights;
  }
  double wsum = 0.0;
  for (double w : log.weights) wsum += w;
  log.mean_w = wsum / static_cast<double>(log.weights.size());

  decoder::LayerGradients combined(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    combined[i].resize(pos.grads[i].size());
    for (std::size_t k = 0; k < combined[i].size(); ++k) {
      double g = cfg.lambda_pos * pos.grads[i][k];
      if (consistency) g += cfg.lambda_neg * neg.grads[i][k];
      combined[i][k] = static_cast<float>(log.weights[i] * g);
    }
  }

  Image cot(check.width, check.height);
  auto c = cot.pixels();
  const std::size_t h = static_cast<std::size_t>(check.height), w = static_cast<std::size_t>(check.width);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch)
        c[(y * w + x) * 3 + ch] = cfg.lambda_pos * pos.input_grad[(ch * h + y) * w + x];
  axpy(grads, 1.0, splat::render_vjp(student, check, cot));

  state.gaussians.step(student, grads);
  decoder_update(net, combined, state.decoder, cfg.lr_decoder);
  return log;
}

PoseSchedule::PoseSchedule(const io::PoseSet& poses, const TrainConfig& cfg)
    : count_(poses.cameras.size()),
      check_(static_cast<std::size_t>(cfg.check_view_index)),
      check_only_(cfg.kd_check_only),
      rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL) {
  if (count_ < 2) throw std::invalid_argument("embedding needs at least two poses");
  if (check_ >= count_) throw std::invalid_argument("check_view_index out of range");
}

std::size_t PoseSchedule::distill(int step) const {
  return check_only_ ? check_ : static_cast<std::size_t>(step) % count_;
}

std::size_t PoseSchedule::normal() {
  const std::size_t k = static_cast<std::size_t>(rng_.below(count_ - 1));
  return k < check_ ? k : k + 1;
}

double lr_factor(const TrainConfig& cfg, int step) {
  if (cfg.lr_final_fraction >= 1.0 || cfg.steps_embed <= 1) return 1.0;
  const double t = static_cast<double>(step) / (cfg.steps_embed - 1);
  return cfg.lr_final_fraction + (1.0 - cfg.lr_final_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

EmbedResult train_embed(const Scene& teacher, const io::PoseSet& poses, const HiddenImage& hidden,
                        const TrainConfig& cfg, const EmbedCallback& progress) {
  cfg.validate();
  poses.validate();
  if (teacher.gaussians.empty()) throw std::invalid_argument("train_embed: empty teacher scene");
  PoseSchedule schedule(poses, cfg);
  const Camera& check = poses.cameras[static_cast<std::size_t>(cfg.check_view_index)];

  EmbedResult result{teacher, decoder::build_decoder(cfg.seed, cfg.decoder_width), {}, 0.0};
  EmbedState state(cfg);
  std::vector<Image> cache;
  for (const Camera& cam : poses.cameras) cache.push_back(splat::render(teacher, cam));
  for (int step = 0; step < cfg.steps_embed; ++step) {
    StepOptions opts;
    opts.step = step;
    opts.log_recovery = step % cfg.log_every == 0 || step + 1 == cfg.steps_embed;
    const std::size_t m = schedule.distill(step), n = schedule.normal();
    const Camera& pm = poses.cameras[m];
    const Camera& pn = poses.cameras[n];
    opts.teacher_m = &cache[m];
    opts.teacher_check = &cache[static_cast<std::size_t>(cfg.check_view_index)];
    opts.teacher_normal = &cache[n];
    TrainConfig step_cfg = cfg;
    const double f = lr_factor(cfg, step);
    step_cfg.lr_decoder = cfg.lr_decoder * f;
    state.gaussians.set_base_lr(cfg.lr_gaussian * f);
    StepLog log =
        embed_step(result.student, teacher, result.decoder, state, pm, check, pn, hidden, step_cfg, opts);
    result.max_check_disruption = std::max(result.max_check_disruption, log.check_disruption);
    if (progress) progress(log);
    result.log.push_back(std::move(log));
  }
  if (cfg.steps_embed > 0) {
    const double final_disruption =
        mean_abs_diff(splat::render(result.student, check), splat::render(teacher, check));
    result.max_check_disruption = std::max(result.max_check_disruption, final_disruption);
  }
  return result;
}

Image recover(const DecoderNet& net, const Image& image) { return decoder::decode(net, image); }

void write_log_csv(std::ostream& out, const std::vector<StepLog>& log) {
  out << "step,L_kd,L_d_pos,L_d_neg,mean_w,psnr_check_recovery\n";
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(9);
  for (const StepLog& s : log) {
    out << s.step << ',' << s.l_kd << ',' << s.l_d_pos << ',' << s.l_d_neg << ',' << s.mean_w << ',';
    if (s.psnr_check_recovery) out << *s.psnr_check_recovery;
    out << '\n';
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

double train_identity(DecoderNet& net, const std::vector<Image>& images, int steps, double lr) {
  if (images.empty()) throw std::invalid_argument("train_identity: no images");
  ad::AdamState state;
  double loss = 0.0;
  for (int step = 0; step < steps; ++step) {
    const DecoderPass pass = run_decoder(net, images[static_cast<std::size_t>(step) % images.size()],
                                         nullptr, false, true);
    loss = pass.loss;
    require_finite(loss, "identity loss", step);
    decoder_update(net, pass.grads, state, lr);
  }
  return loss;
}

}  // namespace stegosplat::train
