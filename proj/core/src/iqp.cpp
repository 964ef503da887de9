#include "pssr/iqp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pssr/adam.hpp"
#include "pssr/ops.hpp"
#include "pssr/quality.hpp"
#include "pssr/rng.hpp"
#include "pssr/tensor_bridge.hpp"

namespace pssr::iqp {

using ad::Tensor;

IQPLossBreakdown CombinedLoss::breakdown() const {
  IQPLossBreakdown b;
  b.l_mse = l_mse.item();
  b.l_iqp_im = l_iqp_im.valid() ? l_iqp_im.item() : 0.0;
  b.l_iqp_f = l_iqp_f.valid() ? l_iqp_f.item() : 0.0;
  b.total = total.item();
  b.lambda0 = lambda0;
  b.lambda1 = lambda1;
  b.lambda2 = lambda2;
  return b;
}

Tensor iqp_im_loss(const qa::QAModel& qa_model, const Tensor& sr_left, const Tensor& sr_right,
                   const Tensor& gt_left, const Tensor& gt_right) {
  if (sr_left.shape() != gt_left.shape() || sr_right.shape() != gt_right.shape())
    throw std::invalid_argument("iqp_im_loss: SR and GT shapes differ");
  const Tensor f_sr = qa::qa_first_layer_features(qa_model, sr_left, sr_right);
  const Tensor f_gt = qa::qa_first_layer_features(qa_model, gt_left, gt_right);
  return ad::mse(f_sr, f_gt);
}

double iqp_im_loss(const qa::QAModel& qa_model, const img::StereoPair& sr_pair,
                   const img::StereoPair& gt_pair) {
  img::check_pair(sr_pair);
  img::check_pair(gt_pair);
  if (!img::same_shape(sr_pair.left, gt_pair.left))
    throw std::invalid_argument("iqp_im_loss: SR and GT pair shapes differ");
  img::StereoPair sr = sr_pair, gt = gt_pair;
  const int ps = qa_model.cfg.patch_size;
  if (sr.left.width > ps || sr.left.height > ps) {
    const int w = std::min(ps, sr.left.width), h = std::min(ps, sr.left.height);
    const int r0 = (sr.left.height - h) / 2, c0 = (sr.left.width - w) / 2;
    sr = img::crop_pair(sr, r0, c0, h, w);
    gt = img::crop_pair(gt, r0, c0, h, w);
  }
  return iqp_im_loss(qa_model, img::to_tensor(sr.left), img::to_tensor(sr.right),
                     img::to_tensor(gt.left), img::to_tensor(gt.right))
      .item();
}

namespace {

// Pool SR features down to the QA first-layer resolution (stride-2 first
// conv halves the spatial dims; stride 1 keeps them).
Tensor reconcile(const qa::QAModel& qa_model, const Tensor& feat) {
  if (qa_model.cfg.stride == 1) return feat;
  if (qa_model.cfg.stride == 2) return ad::avg_pool2x2(feat);
  throw std::invalid_argument("iqp_f_loss: unsupported QA first-layer stride " +
                              std::to_string(qa_model.cfg.stride));
}

}  // namespace

Tensor iqp_f_loss(const qa::QAModel& qa_model, const Tensor& feat_left, const Tensor& feat_right,
                  const Tensor& gt_left, const Tensor& gt_right) {
  const int qa_width = qa_model.cfg.widths[0];
  if (feat_left.dim(1) != qa_width)
    throw std::invalid_argument("iqp_f_loss: SR feature width " + std::to_string(feat_left.dim(1)) +
                                " != QA first-layer width " + std::to_string(qa_width) +
                                " (configuration error)");

  const Tensor fl = reconcile(qa_model, feat_left);
  const Tensor fr = reconcile(qa_model, feat_right);
  const Tensor f_srnet = ad::concat_channels({fl, fr, ad::subtract(fl, fr)});

  // GT target built with the same substitution structure: per-view first
  // features in the upper/lower slots, their difference in the middle slot.
  const qa::QAConfig& cfg = qa_model.cfg;
  const Tensor up = ad::leaky_relu(
      ad::conv2d(gt_left, qa_model.upper[0].w, qa_model.upper[0].b, cfg.stride, cfg.pad), cfg.slope);
  const Tensor low = ad::leaky_relu(
      ad::conv2d(gt_right, qa_model.lower[0].w, qa_model.lower[0].b, cfg.stride, cfg.pad), cfg.slope);
  const Tensor f_gt = ad::concat_channels({up, low, ad::subtract(up, low)});

  if (f_srnet.shape() != f_gt.shape())
    throw std::invalid_argument("iqp_f_loss: reconciled feature shape " +
                                ad::shape_str(f_srnet.shape()) + " != GT feature shape " +
                                ad::shape_str(f_gt.shape()));
  return ad::mse(f_srnet, f_gt);
}

CombinedLoss combined_loss(const qa::QAModel* qa_model, const SRForward& fwd,
                           const Tensor& gt_left, const Tensor& gt_right, double lambda0,
                           double lambda1, double lambda2) {
  CombinedLoss out;
  out.lambda0 = lambda0;
  out.lambda1 = lambda1;
  out.lambda2 = lambda2;

  out.l_mse = ad::scalar_combine(
      {ad::mse(fwd.sr_left, gt_left), ad::mse(fwd.sr_right, gt_right)}, {0.5, 0.5});

  if (qa_model == nullptr) {
    if (lambda1 != 0.0 || lambda2 != 0.0)
      throw std::invalid_argument("combined_loss: IQP weights need a QA model");
    out.total = ad::scalar_combine({out.l_mse}, {lambda0});
    return out;
  }

  out.l_iqp_im = iqp_im_loss(*qa_model, fwd.sr_left, fwd.sr_right, gt_left, gt_right);
  out.l_iqp_f = iqp_f_loss(*qa_model, fwd.feat_left, fwd.feat_right, gt_left, gt_right);
  out.total = ad::scalar_combine({out.l_mse, out.l_iqp_im, out.l_iqp_f},
                                 {lambda0, lambda1, lambda2});
  return out;
}

SRTrainResult train_sr(SRModel& model, qa::QAModel* qa_model,
                       const std::vector<img::StereoPair>& scenes, const SRTrainOptions& opt) {
  if (scenes.empty()) throw std::invalid_argument("train_sr: no scenes");
  if (qa_model == nullptr && (opt.lambda1 != 0.0 || opt.lambda2 != 0.0))
    throw std::invalid_argument("train_sr: IQP weights need a QA model");
  if (qa_model) qa_model->set_requires_grad(false);  // frozen guidance

  // Per-scene preprocessing: crop to a multiple of the scale, degrade to LR,
  // upsample back to HR. These are the network inputs; crops are taken from
  // them at training time.
  struct ScenePack {
    img::Image up_l, up_r, gt_l, gt_r;
  };
  std::vector<ScenePack> packs;
  int min_w = 1 << 30, min_h = 1 << 30;
  for (size_t si = 0; si < scenes.size(); ++si) {
    img::StereoPair hr = img::crop_to_multiple(scenes[si], opt.spec.scale);
    deg::DegradationSpec spec = opt.spec;
    spec.seed = derive_seed(opt.spec.seed, 0xD36, si);
    img::StereoPair lr = deg::degrade(hr, spec);
    ScenePack p;
    p.up_l = deg::resize_bicubic(lr.left, hr.left.width, hr.left.height);
    p.up_r = deg::resize_bicubic(lr.right, hr.right.width, hr.right.height);
    p.gt_l = hr.left;
    p.gt_r = hr.right;
    min_w = std::min(min_w, hr.left.width);
    min_h = std::min(min_h, hr.left.height);
    packs.push_back(std::move(p));
  }
  if (opt.patch > min_w || opt.patch > min_h)
    throw std::invalid_argument("train_sr: patch " + std::to_string(opt.patch) +
                                " exceeds smallest scene " + std::to_string(min_w) + "x" +
                                std::to_string(min_h));

  ad::AdamConfig acfg;
  acfg.lr = opt.lr;
  ad::Adam optim(model.parameters(), acfg);

  const int steps_per_epoch = std::max<int>(1, static_cast<int>(scenes.size()) / opt.batch);
  SplitMix64 rng(derive_seed(opt.seed, 0x7124117));

  SRTrainResult result;
  double initial_total = -1.0;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    EpochLoss acc;
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<img::Image> crops;  // 4 per sample: up_l, up_r, gt_l, gt_r
      crops.reserve(static_cast<size_t>(opt.batch) * 4);
      for (int bi = 0; bi < opt.batch; ++bi) {
        const auto& p = packs[static_cast<size_t>(rng.uniform_int(static_cast<int>(packs.size())))];
        const int r0 = rng.uniform_int(p.gt_l.height - opt.patch + 1);
        const int c0 = rng.uniform_int(p.gt_l.width - opt.patch + 1);
        crops.push_back(img::crop(p.up_l, r0, c0, opt.patch, opt.patch));
        crops.push_back(img::crop(p.up_r, r0, c0, opt.patch, opt.patch));
        crops.push_back(img::crop(p.gt_l, r0, c0, opt.patch, opt.patch));
        crops.push_back(img::crop(p.gt_r, r0, c0, opt.patch, opt.patch));
      }
      std::vector<const img::Image*> up_l, up_r, gt_l, gt_r;
      for (int bi = 0; bi < opt.batch; ++bi) {
        up_l.push_back(&crops[static_cast<size_t>(bi) * 4 + 0]);
        up_r.push_back(&crops[static_cast<size_t>(bi) * 4 + 1]);
        gt_l.push_back(&crops[static_cast<size_t>(bi) * 4 + 2]);
        gt_r.push_back(&crops[static_cast<size_t>(bi) * 4 + 3]);
      }

      const Tensor t_up_l = img::batch_to_tensor(up_l);
      const Tensor t_up_r = img::batch_to_tensor(up_r);
      const Tensor t_gt_l = img::batch_to_tensor(gt_l);
      const Tensor t_gt_r = img::batch_to_tensor(gt_r);

      SRForward fwd = sr_forward(model, t_up_l, t_up_r);
      CombinedLoss loss = combined_loss(qa_model, fwd, t_gt_l, t_gt_r, opt.lambda0, opt.lambda1,
                                        opt.lambda2);
      const IQPLossBreakdown b = loss.breakdown();
      if (!std::isfinite(b.total))
        throw std::runtime_error("train_sr: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(step));
      if (initial_total < 0.0) initial_total = b.total;
      if (initial_total > 0.0 && b.total > opt.divergence_factor * initial_total)
        throw std::runtime_error("train_sr: diverged at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(step) + " (loss " +
                                 std::to_string(b.total) + " vs initial " +
                                 std::to_string(initial_total) + ")");

      optim.zero_grad();
      loss.total.backward();
      optim.step();

      acc.l_mse += b.l_mse;
      acc.l_iqp_im += b.l_iqp_im;
      acc.l_iqp_f += b.l_iqp_f;
      acc.total += b.total;
    }
    acc.l_mse /= steps_per_epoch;
    acc.l_iqp_im /= steps_per_epoch;
    acc.l_iqp_f /= steps_per_epoch;
    acc.total /= steps_per_epoch;
    result.curve.push_back(acc);
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_loss_curve_csv(const std::string& path, const std::vector<EpochLoss>& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("loss curve: cannot open '" + path + "'");
  os << "epoch,l_mse,l_iqp_im,l_iqp_f,total\n";
  for (size_t e = 0; e < curve.size(); ++e)
    os << e << "," << fmt(curve[e].l_mse) << "," << fmt(curve[e].l_iqp_im) << ","
       << fmt(curve[e].l_iqp_f) << "," << fmt(curve[e].total) << "\n";
  if (!os) throw std::runtime_error("loss curve: write failed for '" + path + "'");
}

EvalRow eval_pair(const std::string& model_name, const img::StereoPair& sr_pair,
                  const img::StereoPair& hr_scene, const qa::QAModel* qa_model, int bm_window,
                  int bm_search) {
  EvalRow row;
  row.model = model_name;
  row.psnr = quality::pair_psnr(sr_pair, hr_scene);
  row.ssim = quality::pair_ssim(sr_pair, hr_scene);
  row.qa_score = std::numeric_limits<double>::quiet_NaN();
  if (qa_model) {
    const int ps = std::min({qa_model->cfg.patch_size, sr_pair.left.width, sr_pair.left.height});
    row.qa_score = qa::qa_predict(*qa_model, sr_pair, ps, ps).score;
  }
  row.epe = std::numeric_limits<double>::quiet_NaN();
  if (hr_scene.disparity_gt) {
    const auto est = quality::block_match_disparity(sr_pair, bm_window, bm_search);
    const auto gt = quality::to_disparity_map(*hr_scene.disparity_gt);
    row.epe = quality::epe(est, gt).value;
  }
  return row;
}

std::vector<EvalRow> eval_sr(const std::vector<std::pair<std::string, const SRModel*>>& models,
                             const std::vector<img::StereoPair>& scenes,
                             const std::vector<deg::DegradationSpec>& specs,
                             const qa::QAModel* qa_model, uint64_t seed, int bm_window,
                             int bm_search) {
  if (models.empty()) throw std::invalid_argument("eval_sr: no models");
  if (scenes.empty()) throw std::invalid_argument("eval_sr: no scenes");
  if (specs.empty()) throw std::invalid_argument("eval_sr: no specs");

  std::vector<EvalRow> rows;
  for (const auto& [name, model] : models) {
    for (size_t spec_i = 0; spec_i < specs.size(); ++spec_i) {
      for (size_t scene_i = 0; scene_i < scenes.size(); ++scene_i) {
        deg::DegradationSpec spec = specs[spec_i];
        spec.seed = derive_seed(seed, spec_i, scene_i);
        const img::StereoPair hr = img::crop_to_multiple(scenes[scene_i], spec.scale);
        const img::StereoPair lr = deg::degrade(hr, spec);
        const img::StereoPair sr = super_resolve(*model, lr, spec.scale);
        EvalRow row = eval_pair(name, sr, hr, qa_model, bm_window, bm_search);
        row.spec_index = static_cast<int>(spec_i);
        row.scene_index = static_cast<int>(scene_i);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_eval_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("eval csv: cannot open '" + path + "'");
  os << "model,spec,scene,psnr,ssim,qa_score,epe\n";
  for (const EvalRow& r : rows)
    os << r.model << "," << r.spec_index << "," << r.scene_index << "," << fmt(r.psnr) << ","
       << fmt(r.ssim) << "," << fmt(r.qa_score) << "," << fmt(r.epe) << "\n";
  if (!os) throw std::runtime_error("eval csv: write failed for '" + path + "'");
}

std::string format_eval_table(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %5s %6s %9s %8s %9s %8s\n", "model", "spec", "scene",
                "psnr", "ssim", "qa_score", "epe");
  os << line;
  for (const EvalRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-16s %5d %6d %9.4f %8.4f %9.4f %8.4f\n", r.model.c_str(),
                  r.spec_index, r.scene_index, r.psnr, r.ssim, r.qa_score, r.epe);
    os << line;
  }
  return os.str();
}

}  // namespace pssr::iqp
