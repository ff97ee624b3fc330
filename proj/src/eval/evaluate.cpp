#include "stegosplat/eval/evaluate.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "stegosplat/lsb/lsb.hpp"
#include "stegosplat/splat/render.hpp"

namespace stegosplat::eval {

MetricReport rendering_quality(const splat::Scene& scene, const io::PoseSet& poses,
                               const std::vector<Image>& targets) {
  if (targets.size() != poses.cameras.size()) {
    throw std::invalid_argument("rendering_quality: one target per pose required");
  }
  MetricReport total;
  int n = 0;
  for (std::size_t i = 0; i < poses.cameras.size(); ++i) {
    if (i == poses.check_index) continue;
    const MetricReport r = metrics::compare(splat::render(scene, poses.cameras[i]), targets[i]);
    total.psnr += r.psnr;
    total.ssim += r.ssim;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("rendering_quality: no normal views");
  return {total.psnr / n, total.ssim / n};
}

Image extract(const decoder::DecoderNet* net, const Image& check_image) {
  return net != nullptr ? train::recover(*net, check_image) : clamp01(check_image);
}

MetricReport recovery_quality(const decoder::DecoderNet* net, const Image& check_image,
                              const train::HiddenImage& hidden) {
  return metrics::compare(extract(net, check_image),
                          hidden.at_resolution(check_image.width(), check_image.height()));
}

std::string format_table(const std::vector<MethodRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s | %9s %8s %8s | %9s %8s\n", "method", "PSNR", "SSIM", "LPIPS",
                "PSNR", "SSIM");
  os << std::string(16, ' ') << " | scene rendering            | hidden recovery\n" << line;
  os << std::string(72, '-') << '\n';
  for (const MethodRow& r : rows) {
    char rec[64];
    if (r.recovery) {
      std::snprintf(rec, sizeof rec, "%9.2f %8.4f", r.recovery->psnr, r.recovery->ssim);
    } else {
      std::snprintf(rec, sizeof rec, "%9s %8s", "-", "-");
    }
    std::snprintf(line, sizeof line, "%-16s | %9.2f %8.4f %8s | %s\n", r.method.c_str(), r.rendering.psnr,
                  r.rendering.ssim, "n/a", rec);
    os << line;
  }
  return os.str();
}

LsbBaseline make_lsb_baseline(const splat::Scene& teacher, const splat::Camera& check,
                              const train::HiddenImage& hidden, int bits) {
  LsbBaseline b;
  b.bits = bits;
  b.scale = lsb::cover_scale_for(check.width, check.height, hidden.image(), bits);
  b.cover = splat::render(teacher, check.scaled(b.scale));
  b.stego = lsb::lsb_embed(b.cover, hidden.image(), bits);
  return b;
}

LsbScore score_lsb(const Image& stego, const train::HiddenImage& hidden, int bits) {
  const Image reference = lsb::quantize8(hidden.image());
  LsbScore s;
  const lsb::Extraction ex = lsb::lsb_extract(stego);
  Image got;
  if (ex && ex.hidden->same_shape(reference)) {
    s.header_ok = true;
    got = *ex.hidden;
  } else {
    got = lsb::lsb_extract_unchecked(stego, reference.width(), reference.height(), bits);
  }
  s.exact = got == reference;
  s.quality = metrics::compare(got, reference);
  return s;
}

std::vector<attacks::AttackSpec> robustness_grid() {
  std::vector<attacks::AttackSpec> grid;
  for (double sigma : {0.0, 0.5, 1.0, 2.0, 4.0}) grid.emplace_back(attacks::GaussianBlur{sigma});
  for (int r = 10; r >= 1; --r) grid.emplace_back(attacks::Jpeg{r / 10.0});
  return grid;
}

std::vector<RobustnessRow> robustness_sweep(const decoder::DecoderNet* net, const Image& check_image,
                                            const LsbBaseline& lsb, const train::HiddenImage& hidden,
                                            const std::vector<attacks::AttackSpec>& grid) {
  std::vector<RobustnessRow> rows;
  for (const auto& spec : grid) {
    RobustnessRow row{spec, recovery_quality(net, attacks::apply(spec, check_image), hidden), {}};
    row.lsb = score_lsb(attacks::apply(spec, lsb.stego), hidden, lsb.bits).quality;
    rows.push_back(row);
  }
  return rows;
}

void write_robustness_csv(std::ostream& out, const std::vector<RobustnessRow>& rows) {
  out << "attack,parameter,ours_psnr,ours_ssim,lsb_psnr,lsb_ssim\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(9);
  for (const RobustnessRow& r : rows) {
    if (const auto* b = std::get_if<attacks::GaussianBlur>(&r.attack)) {
      out << "blur," << b->sigma;
    } else {
      out << "jpeg," << std::get<attacks::Jpeg>(r.attack).ratio;
    }
    out << ',' << r.ours.psnr << ',' << r.ours.ssim << ',' << r.lsb.psnr << ',' << r.lsb.ssim << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace stegosplat::eval
