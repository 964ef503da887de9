#include "pssr/checks.hpp"

#include <cmath>

#include "pssr/gradcheck.hpp"
#include "pssr/iqp.hpp"
#include "pssr/ops.hpp"
#include "pssr/qa_net.hpp"
#include "pssr/rng.hpp"
#include "pssr/sr_net.hpp"

namespace pssr::checks {

using ad::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(ad::shape_size(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Keep leaky-relu inputs away from the kink so central differences stay
// one-sided.
Tensor random_tensor_off_kink(std::vector<int> shape, SplitMix64& rng) {
  std::vector<double> v(static_cast<size_t>(ad::shape_size(shape)));
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
    if (std::abs(x) < 1e-2) x = x < 0.0 ? x - 1e-2 : x + 1e-2;
  }
  return Tensor::from(std::move(shape), std::move(v));
}

GradSuiteEntry run_one(const std::string& name, const std::function<Tensor()>& build,
                       std::vector<Tensor> leaves, uint64_t seed) {
  const ad::GradCheckResult r = ad::grad_check(build, std::move(leaves), 1e-5, 4000, seed);
  GradSuiteEntry e;
  e.name = name;
  e.max_rel_err = r.max_rel_err;
  e.coords = r.coords_checked;
  e.pass = r.analytic_finite && r.max_rel_err <= kGradTolerance;
  return e;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradcheck_suite(uint64_t seed) {
  std::vector<GradSuiteEntry> out;
  SplitMix64 rng(derive_seed(seed, 0xC4EC));

  {
    Tensor x = random_tensor({1, 2, 5, 5}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    out.push_back(run_one("conv2d_s1p1", [&] { return ad::mse(ad::conv2d(x, w, b, 1, 1), Tensor::zeros({1, 3, 5, 5})); },
                          {x, w, b}, seed));
  }
  {
    Tensor x = random_tensor({2, 3, 6, 6}, rng);
    Tensor w = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    out.push_back(run_one("conv2d_s2p1", [&] { return ad::mse(ad::conv2d(x, w, b, 2, 1), Tensor::zeros({2, 4, 3, 3})); },
                          {x, w, b}, seed));
  }
  {
    Tensor x = random_tensor({2, 4}, rng);
    Tensor w = random_tensor({4, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    out.push_back(run_one("dense", [&] { return ad::mse(ad::dense(x, w, b), Tensor::zeros({2, 3})); },
                          {x, w, b}, seed));
  }
  {
    Tensor x = random_tensor_off_kink({1, 3, 4, 4}, rng);
    out.push_back(run_one("leaky_relu", [&] { return ad::mse(ad::leaky_relu(x, 0.1), Tensor::zeros({1, 3, 4, 4})); },
                          {x}, seed));
  }
  {
    Tensor a = random_tensor({1, 2, 3, 3}, rng);
    Tensor b = random_tensor({1, 2, 3, 3}, rng);
    out.push_back(run_one("add", [&] { return ad::mse(ad::add(a, b), Tensor::zeros({1, 2, 3, 3})); },
                          {a, b}, seed));
    out.push_back(run_one("subtract", [&] { return ad::mse(ad::subtract(a, b), Tensor::zeros({1, 2, 3, 3})); },
                          {a, b}, seed));
  }
  {
    Tensor a = random_tensor({1, 2, 3, 3}, rng);
    Tensor b = random_tensor({1, 3, 3, 3}, rng);
    Tensor c = random_tensor({1, 1, 3, 3}, rng);
    out.push_back(run_one("concat_channels",
                          [&] {
                            return ad::mse(ad::concat_channels({a, b, c}),
                                           Tensor::zeros({1, 6, 3, 3}));
                          },
                          {a, b, c}, seed));
    out.push_back(run_one("slice_channels",
                          [&] {
                            return ad::mse(ad::slice_channels(ad::concat_channels({a, b, c}), 1, 4),
                                           Tensor::zeros({1, 3, 3, 3}));
                          },
                          {a, b, c}, seed));
  }
  {
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    out.push_back(run_one("global_avg_pool", [&] { return ad::mse(ad::global_avg_pool(x), Tensor::zeros({2, 3})); },
                          {x}, seed));
    out.push_back(run_one("avg_pool2x2", [&] { return ad::mse(ad::avg_pool2x2(x), Tensor::zeros({2, 3, 2, 2})); },
                          {x}, seed));
  }
  {
    Tensor a = random_tensor({2, 3, 4, 4}, rng);
    Tensor b = random_tensor({2, 3, 4, 4}, rng);
    out.push_back(run_one("mse", [&] { return ad::mse(a, b); }, {a, b}, seed));
  }
  {
    Tensor a = random_tensor({1}, rng);
    Tensor b = random_tensor({1}, rng);
    Tensor c = random_tensor({1}, rng);
    out.push_back(run_one("scalar_combine",
                          [&] { return ad::scalar_combine({a, b, c}, {1.0, 0.1, 0.1}); },
                          {a, b, c}, seed));
  }

  // Full QA network, tiny config, 16x16 patches, batch 2.
  {
    qa::QAConfig cfg;
    cfg.widths = {4, 8};
    cfg.head_width = 8;
    cfg.patch_size = 16;
    qa::QAModel model = qa::QAModel::init(cfg, derive_seed(seed, 0x9A11));
    SplitMix64 drng(derive_seed(seed, 0xDA7A));
    Tensor left = random_tensor_off_kink({2, 3, 16, 16}, drng);
    Tensor right = random_tensor_off_kink({2, 3, 16, 16}, drng);
    Tensor z = random_tensor({2, 1}, drng, 1.0, 10.0);
    std::vector<Tensor> leaves = model.parameters();
    leaves.push_back(left);
    leaves.push_back(right);
    out.push_back(run_one("qa_network",
                          [&] {
                            qa::QAForward f = qa::qa_forward(model, left, right);
                            return ad::mse(f.y, z);
                          },
                          leaves, seed));
  }

  // Full combined IQP loss graph: tiny SR net + tiny QA net, 8x8 LR at x2.
  {
    qa::QAConfig qcfg;
    qcfg.widths = {4, 8};
    qcfg.head_width = 8;
    qcfg.patch_size = 16;
    qa::QAModel qa_model = qa::QAModel::init(qcfg, derive_seed(seed, 0x9A22));
    qa_model.set_requires_grad(false);

    iqp::SRConfig scfg;
    scfg.trunk_width = 4;  // matches the tiny QA first-layer width
    iqp::SRModel sr = iqp::SRModel::init(scfg, derive_seed(seed, 0x55AA));
    // Zero-initialized recon layer has zero gradient signal through the
    // trunk at the kink; nudge it off zero for the check.
    SplitMix64 wrng(derive_seed(seed, 0xFEED));
    for (double& v : sr.recon.w.values()) v = 0.1 * wrng.normal();
    for (double& v : sr.recon.b.values()) v = 0.1 * wrng.normal();

    SplitMix64 drng(derive_seed(seed, 0xDA7B));
    Tensor up_l = random_tensor({1, 3, 16, 16}, drng, 0.0, 1.0);
    Tensor up_r = random_tensor({1, 3, 16, 16}, drng, 0.0, 1.0);
    Tensor gt_l = random_tensor({1, 3, 16, 16}, drng, 0.0, 1.0);
    Tensor gt_r = random_tensor({1, 3, 16, 16}, drng, 0.0, 1.0);

    std::vector<Tensor> leaves = sr.parameters();
    out.push_back(run_one("iqp_combined_loss",
                          [&] {
                            iqp::SRForward f = iqp::sr_forward(sr, up_l, up_r);
                            return iqp::combined_loss(&qa_model, f, gt_l, gt_r, 1.0, 0.1, 0.1).total;
                          },
                          leaves, seed));
  }

  return out;
}

bool all_pass(const std::vector<GradSuiteEntry>& entries) {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

}  // namespace pssr::checks
