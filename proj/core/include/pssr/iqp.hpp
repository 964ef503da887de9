#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pssr/degradation.hpp"
#include "pssr/image.hpp"
#include "pssr/qa_net.hpp"
#include "pssr/sr_net.hpp"

namespace pssr::iqp {

struct IQPLossBreakdown {
  double l_mse = 0.0;
  double l_iqp_im = 0.0;
  double l_iqp_f = 0.0;
  double total = 0.0;
  double lambda0 = 1.0, lambda1 = 0.1, lambda2 = 0.1;
};

struct CombinedLoss {
  ad::Tensor total;
  ad::Tensor l_mse;
  ad::Tensor l_iqp_im;  // invalid tensors when no QA model was supplied
  ad::Tensor l_iqp_f;
  double lambda0 = 1.0, lambda1 = 0.0, lambda2 = 0.0;

  IQPLossBreakdown breakdown() const;
};

// Image-level IQP term: mean squared distance between the QA first-layer
// feature stacks of the SR and GT pairs. QA parameters stay frozen; the
// gradient flows into the SR tensors only.
ad::Tensor iqp_im_loss(const qa::QAModel& qa_model, const ad::Tensor& sr_left,
                       const ad::Tensor& sr_right, const ad::Tensor& gt_left,
                       const ad::Tensor& gt_right);

// Image-pair convenience: center-crops both pairs to the QA patch size when
// they are larger, then evaluates the tensor form.
double iqp_im_loss(const qa::QAModel& qa_model, const img::StereoPair& sr_pair,
                   const img::StereoPair& gt_pair);

// Feature-level IQP term. The SR net's last features stand in for the QA
// first-layer features: per-view features fill the upper/lower slots and
// their difference fills the middle slot; the GT target is built with the
// same substitution map from the GT pair's first-layer features. Spatial
// reconciliation is a 2x2 average pool when the QA first conv has stride 2.
ad::Tensor iqp_f_loss(const qa::QAModel& qa_model, const ad::Tensor& feat_left,
                      const ad::Tensor& feat_right, const ad::Tensor& gt_left,
                      const ad::Tensor& gt_right);

// total = lambda0*l_mse + lambda1*l_iqp_im + lambda2*l_iqp_f, with
// l_mse the mean squared pixel error over both views. qa_model may be null
// only when lambda1 = lambda2 = 0 (pure MSE objective).
CombinedLoss combined_loss(const qa::QAModel* qa_model, const SRForward& fwd,
                           const ad::Tensor& gt_left, const ad::Tensor& gt_right, double lambda0,
                           double lambda1, double lambda2);

struct SRTrainOptions {
  int epochs = 50;
  int batch = 4;  // desk-scale batch
  int patch = 120;
  double lr = 1e-4;
  double lambda0 = 1.0, lambda1 = 0.1, lambda2 = 0.1;
  uint64_t seed = 1;
  deg::DegradationSpec spec;        // HR -> LR recipe applied to every scene
  double divergence_factor = 10.0;  // abort when loss exceeds this x initial
};

struct EpochLoss {
  double l_mse = 0.0, l_iqp_im = 0.0, l_iqp_f = 0.0, total = 0.0;
};

struct SRTrainResult {
  std::vector<EpochLoss> curve;
};

// Adam over the combined loss on random aligned patch crops. The crop/batch
// randomness never depends on the lambdas, so a lambda1 = lambda2 = 0 run
// walks the exact trajectory of a pure-MSE run under the same seed. qa_model,
// when supplied, is frozen (its parameters are bit-identical afterwards).
SRTrainResult train_sr(SRModel& model, qa::QAModel* qa_model,
                       const std::vector<img::StereoPair>& scenes, const SRTrainOptions& opt);

void write_loss_curve_csv(const std::string& path, const std::vector<EpochLoss>& curve);

struct EvalRow {
  std::string model;
  int spec_index = 0;
  int scene_index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double qa_score = 0.0;  // NaN when no QA model given
  double epe = 0.0;       // NaN when the scene has no disparity ground truth
};

// Metrics of one restored pair against its HR scene.
EvalRow eval_pair(const std::string& model_name, const img::StereoPair& sr_pair,
                  const img::StereoPair& hr_scene, const qa::QAModel* qa_model, int bm_window = 7,
                  int bm_search = 16);

// model x spec x scene sweep: degrade, super-resolve, score.
std::vector<EvalRow> eval_sr(const std::vector<std::pair<std::string, const SRModel*>>& models,
                             const std::vector<img::StereoPair>& scenes,
                             const std::vector<deg::DegradationSpec>& specs,
                             const qa::QAModel* qa_model, uint64_t seed, int bm_window = 7,
                             int bm_search = 16);

void write_eval_csv(const std::string& path, const std::vector<EvalRow>& rows);
std::string format_eval_table(const std::vector<EvalRow>& rows);

}  // namespace pssr::iqp
