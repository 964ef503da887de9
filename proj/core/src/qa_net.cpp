#include "pssr/qa_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "pssr/ops.hpp"
#include "pssr/adam.hpp"
#include "pssr/rng.hpp"
#include "pssr/tensor_bridge.hpp"

namespace pssr::qa {

using ad::Tensor;

std::string QAConfig::to_json() const {
  nlohmann::ordered_json j;
  j["widths"] = widths;
  j["kernel"] = kernel;
  j["stride"] = stride;
  j["pad"] = pad;
  j["head_width"] = head_width;
  j["slope"] = slope;
  j["patch_size"] = patch_size;
  j["in_channels"] = in_channels;
  j["share_branch_weights"] = share_branch_weights;
  j["fr_mode"] = fr_mode;
  j["head_bias_init"] = head_bias_init;
  return j.dump(2);
}

QAConfig QAConfig::from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  QAConfig c;
  c.widths = j.at("widths").get<std::vector<int>>();
  c.kernel = j.value("kernel", 3);
  c.stride = j.value("stride", 2);
  c.pad = j.value("pad", 1);
  c.head_width = j.value("head_width", 64);
  c.slope = j.value("slope", 0.1);
  c.patch_size = j.value("patch_size", 120);
  c.in_channels = j.value("in_channels", 3);
  c.share_branch_weights = j.value("share_branch_weights", false);
  c.fr_mode = j.value("fr_mode", false);
  c.head_bias_init = j.value("head_bias_init", 5.5);
  return c;
}

namespace {

Tensor he_normal(std::vector<int> shape, int fan_in, SplitMix64& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<double> v(static_cast<size_t>(ad::shape_size(shape)));
  for (double& x : v) x = std * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Middle-branch input channel count at layer l (0-based).
int middle_in_channels(const QAConfig& cfg, int l) {
  if (l == 0) return cfg.in_channels;
  return 2 * cfg.widths[static_cast<size_t>(l - 1)];  // df_{l-1} + f_mid_{l-1}
}

std::vector<ConvLayer> init_branch(const QAConfig& cfg, bool middle, uint64_t seed) {
  std::vector<ConvLayer> layers;
  int in_c = cfg.in_channels;
  for (size_t l = 0; l < cfg.widths.size(); ++l) {
    const int out_c = cfg.widths[l];
    const int ic = middle ? middle_in_channels(cfg, static_cast<int>(l)) : in_c;
    SplitMix64 rng(derive_seed(seed, l));
    ConvLayer layer;
    layer.w = he_normal({out_c, ic, cfg.kernel, cfg.kernel}, ic * cfg.kernel * cfg.kernel, rng);
    layer.b = Tensor::zeros({out_c}, true);
    layers.push_back(layer);
    in_c = out_c;
  }
  return layers;
}

void name_branch(std::vector<ConvLayer>& layers, const std::string& prefix) {
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].w.set_name(prefix + std::to_string(l) + ".w");
    layers[l].b.set_name(prefix + std::to_string(l) + ".b");
  }
}

}  // namespace

QAModel QAModel::init(const QAConfig& cfg, uint64_t seed) {
  if (cfg.widths.empty()) throw std::invalid_argument("qa: config needs at least one conv layer");
  QAModel m;
  m.cfg = cfg;
  m.upper = init_branch(cfg, false, derive_seed(seed, 0x111));
  m.lower = cfg.share_branch_weights ? m.upper : init_branch(cfg, false, derive_seed(seed, 0x222));
  m.middle = init_branch(cfg, true, derive_seed(seed, 0x333));
  name_branch(m.upper, "qa.upper.");
  if (!cfg.share_branch_weights) name_branch(m.lower, "qa.lower.");
  name_branch(m.middle, "qa.middle.");

  const int feat = 3 * cfg.widths.back();
  SplitMix64 rng1(derive_seed(seed, 0x444));
  m.fc1_w = he_normal({feat, cfg.head_width}, feat, rng1).set_name("qa.fc1.w");
  m.fc1_b = Tensor::zeros({cfg.head_width}, true).set_name("qa.fc1.b");
  SplitMix64 rng2(derive_seed(seed, 0x555));
  m.fc2_w = he_normal({cfg.head_width, 1}, cfg.head_width, rng2).set_name("qa.fc2.w");
  m.fc2_b = Tensor::full({1}, cfg.head_bias_init, true).set_name("qa.fc2.b");
  return m;
}

std::vector<Tensor> QAModel::parameters() const {
  std::vector<Tensor> ps;
  auto push_branch = [&](const std::vector<ConvLayer>& br) {
    for (const auto& l : br) {
      ps.push_back(l.w);
      ps.push_back(l.b);
    }
  };
  push_branch(upper);
  if (!cfg.share_branch_weights) push_branch(lower);
  push_branch(middle);
  ps.push_back(fc1_w);
  ps.push_back(fc1_b);
  ps.push_back(fc2_w);
  ps.push_back(fc2_b);
  return ps;
}

ad::NamedTensors QAModel::named_parameters() const {
  ad::NamedTensors out;
  for (const Tensor& t : parameters()) out.emplace_back(t.name(), t);
  return out;
}

void QAModel::set_requires_grad(bool rg) {
  for (Tensor& t : parameters()) t.set_requires_grad(rg);
}

void QAModel::save(const std::string& weights_path) const {
  ad::save_weights(weights_path, named_parameters());
  std::string cfg_path = weights_path + ".json";
  std::ofstream os(cfg_path, std::ios::trunc);
  if (!os) throw std::runtime_error("qa: cannot write config '" + cfg_path + "'");
  os << cfg.to_json() << "\n";
}

QAModel QAModel::load(const std::string& weights_path) {
  std::ifstream is(weights_path + ".json");
  if (!is) throw std::runtime_error("qa: missing config '" + weights_path + ".json'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  QAModel m = QAModel::init(QAConfig::from_json(text), 0);

  const ad::NamedTensors loaded = ad::load_weights(weights_path);
  ad::NamedTensors expect = m.named_parameters();
  if (loaded.size() != expect.size())
    throw std::runtime_error("qa: checkpoint tensor count " + std::to_string(loaded.size()) +
                             " != expected " + std::to_string(expect.size()));
  for (size_t i = 0; i < loaded.size(); ++i) {
    if (loaded[i].first != expect[i].first)
      throw std::runtime_error("qa: checkpoint tensor '" + loaded[i].first + "' where '" +
                               expect[i].first + "' expected");
    if (loaded[i].second.shape() != expect[i].second.shape())
      throw std::runtime_error("qa: shape mismatch for '" + loaded[i].first + "'");
    expect[i].second.values() = loaded[i].second.values();
  }
  return m;
}

QAForward qa_forward(const QAModel& model, const Tensor& left, const Tensor& right) {
  const QAConfig& cfg = model.cfg;
  if (left.shape() != right.shape())
    throw std::invalid_argument("qa_forward: left " + ad::shape_str(left.shape()) +
                                " vs right " + ad::shape_str(right.shape()));
  if (left.dim(1) != cfg.in_channels)
    throw std::invalid_argument("qa_forward: expected " + std::to_string(cfg.in_channels) +
                                " input channels, got " + std::to_string(left.dim(1)));

  QAForward out;
  Tensor up = left;
  Tensor low = right;
  Tensor mid = ad::subtract(left, right);

  const size_t n_layers = cfg.widths.size();
  for (size_t l = 0; l < n_layers; ++l) {
    up = ad::leaky_relu(ad::conv2d(up, model.upper[l].w, model.upper[l].b, cfg.stride, cfg.pad),
                        cfg.slope);
    low = ad::leaky_relu(ad::conv2d(low, model.lower[l].w, model.lower[l].b, cfg.stride, cfg.pad),
                         cfg.slope);
    mid = ad::leaky_relu(ad::conv2d(mid, model.middle[l].w, model.middle[l].b, cfg.stride, cfg.pad),
                         cfg.slope);
    out.upper_feats.push_back(up);
    out.lower_feats.push_back(low);
    out.middle_feats.push_back(mid);
    if (l + 1 < n_layers) mid = ad::concat_channels({ad::subtract(up, low), mid});
  }

  out.f_iqa = ad::concat_channels({out.upper_feats[0], out.lower_feats[0], out.middle_feats[0]});

  const Tensor v = ad::concat_channels(
      {ad::global_avg_pool(out.upper_feats.back()), ad::global_avg_pool(out.lower_feats.back()),
       ad::global_avg_pool(out.middle_feats.back())});
  const Tensor h = ad::leaky_relu(ad::dense(v, model.fc1_w, model.fc1_b), cfg.slope);
  out.y = ad::dense(h, model.fc2_w, model.fc2_b);
  return out;
}

QAForward qa_forward_pair(const QAModel& model, const img::StereoPair& patch) {
  img::check_pair(patch);
  if (patch.left.width != model.cfg.patch_size || patch.left.height != model.cfg.patch_size)
    throw std::invalid_argument("qa_forward: patch " + std::to_string(patch.left.width) + "x" +
                                std::to_string(patch.left.height) + " must be exactly " +
                                std::to_string(model.cfg.patch_size) + "x" +
                                std::to_string(model.cfg.patch_size));
  return qa_forward(model, img::to_tensor(patch.left), img::to_tensor(patch.right));
}

ad::Tensor qa_first_layer_features(const QAModel& model, const Tensor& left, const Tensor& right) {
  const QAConfig& cfg = model.cfg;
  const Tensor mid_in = ad::subtract(left, right);
  const Tensor up = ad::leaky_relu(
      ad::conv2d(left, model.upper[0].w, model.upper[0].b, cfg.stride, cfg.pad), cfg.slope);
  const Tensor low = ad::leaky_relu(
      ad::conv2d(right, model.lower[0].w, model.lower[0].b, cfg.stride, cfg.pad), cfg.slope);
  const Tensor mid = ad::leaky_relu(
      ad::conv2d(mid_in, model.middle[0].w, model.middle[0].b, cfg.stride, cfg.pad), cfg.slope);
  return ad::concat_channels({up, low, mid});
}

QATrainResult qa_train(QAModel& model, const std::vector<TrainSample>& dataset, int epochs,
                       int batch_size, uint64_t seed, double lr) {
  if (dataset.empty()) throw std::invalid_argument("qa_train: empty dataset");
  if (batch_size < 1 || batch_size > static_cast<int>(dataset.size()))
    throw std::invalid_argument("qa_train: batch size " + std::to_string(batch_size) +
                                " not in [1, " + std::to_string(dataset.size()) + "]");
  for (const TrainSample& s : dataset)
    if (s.label < 1.0 || s.label > 10.0)
      throw std::invalid_argument("qa_train: label " + std::to_string(s.label) +
                                  " outside [1,10]");

  model.set_requires_grad(true);
  ad::AdamConfig acfg;
  acfg.lr = lr;
  ad::Adam opt(model.parameters(), acfg);

  QATrainResult result;
  std::vector<size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    SplitMix64 rng(derive_seed(seed, static_cast<uint64_t>(epoch), 0xE90C4));
    rng.shuffle(idx);
    double epoch_acc = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(batch_size)) {
      const size_t end = std::min(idx.size(), start + static_cast<size_t>(batch_size));
      std::vector<const img::Image*> lefts, rights;
      std::vector<double> labels;
      for (size_t q = start; q < end; ++q) {
        lefts.push_back(&dataset[idx[q]].patch.left);
        rights.push_back(&dataset[idx[q]].patch.right);
        labels.push_back(dataset[idx[q]].label);
      }
      const Tensor lt = img::batch_to_tensor(lefts);
      const Tensor rt = img::batch_to_tensor(rights);
      const Tensor z = Tensor::from({static_cast<int>(labels.size()), 1}, labels);

      QAForward fwd = qa_forward(model, lt, rt);
      Tensor loss = ad::mse(fwd.y, z);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw std::runtime_error("qa_train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(start / batch_size));
      opt.zero_grad();
      loss.backward();
      opt.step();
      epoch_acc += lv * static_cast<double>(end - start);
      seen += end - start;
    }
    result.epoch_loss.push_back(epoch_acc / static_cast<double>(seen));
  }
  return result;
}

ScorePrediction qa_predict(const QAModel& model, const img::StereoPair& pair, int patch_size,
                           int stride) {
  img::check_pair(pair);
  if (pair.left.width < patch_size || pair.left.height < patch_size)
    throw std::invalid_argument("qa_predict: image " + std::to_string(pair.left.width) + "x" +
                                std::to_string(pair.left.height) + " smaller than patch " +
                                std::to_string(patch_size));
  const std::vector<img::StereoPair> patches = img::extract_patches(pair, patch_size, stride);

  std::vector<const img::Image*> lefts, rights;
  for (const auto& p : patches) {
    lefts.push_back(&p.left);
    rights.push_back(&p.right);
  }
  QAForward fwd = qa_forward(model, img::batch_to_tensor(lefts), img::batch_to_tensor(rights));

  ScorePrediction pred;
  pred.n_patches = static_cast<int>(patches.size());
  pred.patch_scores = fwd.y.values();
  double acc = 0.0;
  for (double s : pred.patch_scores) acc += s;
  pred.score = acc / static_cast<double>(pred.patch_scores.size());
  return pred;
}

rankmos::Voter qa_as_voter(const QAModel& model) {
  const int ps = model.cfg.patch_size;
  return {"stereosrqa", quality::Polarity::higher_better,
          [&model, ps](const img::StereoPair& version, const img::StereoPair&) {
            return qa_predict(model, version, ps, ps).score;
          }};
}

img::StereoPair make_fr_input(const img::StereoPair& distorted, const img::StereoPair& reference) {
  img::check_pair(distorted);
  img::check_pair(reference);
  if (!img::same_shape(distorted.left, reference.left))
    throw std::invalid_argument("make_fr_input: distorted and reference shapes differ");
  img::StereoPair out;
  out.left = distorted.left;
  out.right = distorted.right;
  for (size_t i = 0; i < out.left.pix.size(); ++i) out.left.pix[i] -= reference.left.pix[i];
  for (size_t i = 0; i < out.right.pix.size(); ++i) out.right.pix[i] -= reference.right.pix[i];
  return out;
}

}  // namespace pssr::qa
