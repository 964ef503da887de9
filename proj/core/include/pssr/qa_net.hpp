#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pssr/image.hpp"
#include "pssr/rankmos.hpp"
#include "pssr/tensor.hpp"
#include "pssr/weights_io.hpp"

namespace pssr::qa {

struct QAConfig {
  std::vector<int> widths = {16, 32, 64, 64};  // conv widths per branch layer
  int kernel = 3;
  int stride = 2;
  int pad = 1;
  int head_width = 64;           // hidden width of the two-layer head
  double slope = 0.1;            // leaky-relu
  int patch_size = 120;
  int in_channels = 3;
  bool share_branch_weights = false;  // upper/lower share conv tensors
  bool fr_mode = false;               // full-reference input construction
  double head_bias_init = 5.5;        // final bias starts mid-range of [1,10]

  std::string to_json() const;
  static QAConfig from_json(const std::string& json_text);
};

struct ConvLayer {
  ad::Tensor w;  // [Cout,Cin,k,k]
  ad::Tensor b;  // [Cout]
};

// Three-branch quality net: upper (left view), lower (right view), middle
// (difference stream). The middle layer i >= 2 consumes the concatenation of
// the branch feature difference at i-1 with its own previous feature.
struct QAModel {
  QAConfig cfg;
  std::vector<ConvLayer> upper, lower, middle;
  ad::Tensor fc1_w, fc1_b, fc2_w, fc2_b;

  static QAModel init(const QAConfig& cfg, uint64_t seed);

  std::vector<ad::Tensor> parameters() const;
  ad::NamedTensors named_parameters() const;
  void set_requires_grad(bool rg);

  void save(const std::string& weights_path) const;  // config json sits alongside
  static QAModel load(const std::string& weights_path);
};

struct QAForward {
  ad::Tensor y;      // [N,1]
  ad::Tensor f_iqa;  // [N, 3*widths[0], H1, W1] post-activation first-layer concat
  std::vector<ad::Tensor> upper_feats, lower_feats, middle_feats;  // per-layer trace
};

// left/right: [N,C,H,W]; middle input is left - right.
QAForward qa_forward(const QAModel& model, const ad::Tensor& left, const ad::Tensor& right);

// Patch-level convenience: enforces cfg.patch_size, batch of 1.
QAForward qa_forward_pair(const QAModel& model, const img::StereoPair& patch);

// First-layer features only (the cheap path the IQP losses need).
ad::Tensor qa_first_layer_features(const QAModel& model, const ad::Tensor& left,
                                   const ad::Tensor& right);

struct TrainSample {
  img::StereoPair patch;
  double label = 0.0;  // rankMOS in [1,10]
};

struct QATrainResult {
  std::vector<double> epoch_loss;
};

// Minimizes mean (y - z)^2 with Adam; seeded shuffling makes the run
// deterministic. Throws on non-finite loss naming epoch and batch.
QATrainResult qa_train(QAModel& model, const std::vector<TrainSample>& dataset, int epochs,
                       int batch_size, uint64_t seed, double lr = 1e-4);

struct ScorePrediction {
  double score = 0.0;
  std::vector<double> patch_scores;
  int n_patches = 0;
};

// Scores every patch on the grid and averages in patch-index order.
ScorePrediction qa_predict(const QAModel& model, const img::StereoPair& pair, int patch_size,
                           int stride);

// No-reference voter backed by a trained model.
rankmos::Voter qa_as_voter(const QAModel& model);

// FR input construction: per-view difference pair (distorted - reference).
// Models with cfg.fr_mode expect their inputs built this way.
img::StereoPair make_fr_input(const img::StereoPair& distorted, const img::StereoPair& reference);

}  // namespace pssr::qa
