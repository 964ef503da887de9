#include "pssr/sr_net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pssr/degradation.hpp"
#include "pssr/ops.hpp"
#include "pssr/rng.hpp"
#include "pssr/tensor_bridge.hpp"

namespace pssr::iqp {

using ad::Tensor;

std::string SRConfig::to_json() const {
  nlohmann::ordered_json j;
  j["trunk_width"] = trunk_width;
  j["trunk_layers"] = trunk_layers;
  j["kernel"] = kernel;
  j["in_channels"] = in_channels;
  j["slope"] = slope;
  return j.dump(2);
}

SRConfig SRConfig::from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  SRConfig c;
  c.trunk_width = j.value("trunk_width", 16);
  c.trunk_layers = j.value("trunk_layers", 3);
  c.kernel = j.value("kernel", 3);
  c.in_channels = j.value("in_channels", 3);
  c.slope = j.value("slope", 0.1);
  return c;
}

SRModel SRModel::init(const SRConfig& cfg, uint64_t seed) {
  if (cfg.trunk_layers < 2)
    throw std::invalid_argument("sr: trunk needs at least 2 layers for cross-view concat");
  SRModel m;
  m.cfg = cfg;
  for (int l = 0; l < cfg.trunk_layers; ++l) {
    int in_c = cfg.trunk_width;
    if (l == 0) in_c = cfg.in_channels;
    if (l == 1) in_c = 2 * cfg.trunk_width;  // own + other view features
    SplitMix64 rng(derive_seed(seed, 0x5150, static_cast<uint64_t>(l)));
    const double std = std::sqrt(2.0 / static_cast<double>(in_c * cfg.kernel * cfg.kernel));
    std::vector<double> w(static_cast<size_t>(cfg.trunk_width) * in_c * cfg.kernel * cfg.kernel);
    for (double& x : w) x = std * rng.normal();
    qa::ConvLayer layer;
    layer.w = Tensor::from({cfg.trunk_width, in_c, cfg.kernel, cfg.kernel}, std::move(w), true)
                  .set_name("sr.trunk." + std::to_string(l) + ".w");
    layer.b = Tensor::zeros({cfg.trunk_width}, true).set_name("sr.trunk." + std::to_string(l) + ".b");
    m.trunk.push_back(layer);
  }
  m.recon.w = Tensor::zeros({cfg.in_channels, cfg.trunk_width, cfg.kernel, cfg.kernel}, true)
                  .set_name("sr.recon.w");
  m.recon.b = Tensor::zeros({cfg.in_channels}, true).set_name("sr.recon.b");
  return m;
}

std::vector<Tensor> SRModel::parameters() const {
  std::vector<Tensor> ps;
  for (const auto& l : trunk) {
    ps.push_back(l.w);
    ps.push_back(l.b);
  }
  ps.push_back(recon.w);
  ps.push_back(recon.b);
  return ps;
}

ad::NamedTensors SRModel::named_parameters() const {
  ad::NamedTensors out;
  for (const Tensor& t : parameters()) out.emplace_back(t.name(), t);
  return out;
}

void SRModel::save(const std::string& weights_path) const {
  ad::save_weights(weights_path, named_parameters());
  std::ofstream os(weights_path + ".json", std::ios::trunc);
  if (!os) throw std::runtime_error("sr: cannot write config '" + weights_path + ".json'");
  os << cfg.to_json() << "\n";
}

SRModel SRModel::load(const std::string& weights_path) {
  std::ifstream is(weights_path + ".json");
  if (!is) throw std::runtime_error("sr: missing config '" + weights_path + ".json'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  SRModel m = SRModel::init(SRConfig::from_json(text), 0);

  const ad::NamedTensors loaded = ad::load_weights(weights_path);
  ad::NamedTensors expect = m.named_parameters();
  if (loaded.size() != expect.size())
    throw std::runtime_error("sr: checkpoint tensor count " + std::to_string(loaded.size()) +
                             " != expected " + std::to_string(expect.size()));
  for (size_t i = 0; i < loaded.size(); ++i) {
    if (loaded[i].first != expect[i].first)
      throw std::runtime_error("sr: checkpoint tensor '" + loaded[i].first + "' where '" +
                               expect[i].first + "' expected");
    if (loaded[i].second.shape() != expect[i].second.shape())
      throw std::runtime_error("sr: shape mismatch for '" + loaded[i].first + "'");
    expect[i].second.values() = loaded[i].second.values();
  }
  return m;
}

SRForward sr_forward(const SRModel& model, const Tensor& up_left, const Tensor& up_right) {
  const SRConfig& cfg = model.cfg;
  if (up_left.shape() != up_right.shape())
    throw std::invalid_argument("sr_forward: view shapes differ: " +
                                ad::shape_str(up_left.shape()) + " vs " +
                                ad::shape_str(up_right.shape()));
  const int pad = cfg.kernel / 2;  // stride-1 same-size trunk

  Tensor a = ad::leaky_relu(ad::conv2d(up_left, model.trunk[0].w, model.trunk[0].b, 1, pad), cfg.slope);
  Tensor b = ad::leaky_relu(ad::conv2d(up_right, model.trunk[0].w, model.trunk[0].b, 1, pad), cfg.slope);

  Tensor a_in = ad::concat_channels({a, b});
  Tensor b_in = ad::concat_channels({b, a});
  a = ad::leaky_relu(ad::conv2d(a_in, model.trunk[1].w, model.trunk[1].b, 1, pad), cfg.slope);
  b = ad::leaky_relu(ad::conv2d(b_in, model.trunk[1].w, model.trunk[1].b, 1, pad), cfg.slope);

  for (size_t l = 2; l < model.trunk.size(); ++l) {
    a = ad::leaky_relu(ad::conv2d(a, model.trunk[l].w, model.trunk[l].b, 1, pad), cfg.slope);
    b = ad::leaky_relu(ad::conv2d(b, model.trunk[l].w, model.trunk[l].b, 1, pad), cfg.slope);
  }

  SRForward out;
  out.feat_left = a;
  out.feat_right = b;
  out.sr_left = ad::add(up_left, ad::conv2d(a, model.recon.w, model.recon.b, 1, pad));
  out.sr_right = ad::add(up_right, ad::conv2d(b, model.recon.w, model.recon.b, 1, pad));
  return out;
}

img::StereoPair super_resolve(const SRModel& model, const img::StereoPair& lr, int scale) {
  img::check_pair(lr);
  if (scale < 2 || scale > 4)
    throw std::invalid_argument("super_resolve: scale must lie in {2,3,4}, got " +
                                std::to_string(scale));
  const img::Image up_l =
      deg::resize_bicubic(lr.left, lr.left.width * scale, lr.left.height * scale);
  const img::Image up_r =
      deg::resize_bicubic(lr.right, lr.right.width * scale, lr.right.height * scale);
  SRForward fwd = sr_forward(model, img::to_tensor(up_l), img::to_tensor(up_r));
  img::StereoPair out;
  out.left = img::from_tensor(fwd.sr_left, 0, /*clamp01=*/true);
  out.right = img::from_tensor(fwd.sr_right, 0, /*clamp01=*/true);
  return out;
}

}  // namespace pssr::iqp
