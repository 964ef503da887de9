#include <benchmark/benchmark.h>

#include "pssr/degradation.hpp"
#include "pssr/ops.hpp"
#include "pssr/qa_net.hpp"
#include "pssr/quality.hpp"
#include "pssr/rng.hpp"
#include "pssr/scene.hpp"
#include "pssr/tensor_bridge.hpp"

namespace {

using pssr::ad::Tensor;

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  pssr::SplitMix64 rng(seed);
  std::vector<double> v(static_cast<size_t>(pssr::ad::shape_size(shape)));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v));
}

void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = random_tensor({1, c, 120, 120}, 1);
  Tensor w = random_tensor({c, c, 3, 3}, 2);
  Tensor b = random_tensor({c}, 3);
  for (auto _ : state) {
    Tensor y = pssr::ad::conv2d(x, w, b, 1, 1);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c) * c * 120 * 120 * 9);
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Tensor x = random_tensor({1, c, 120, 120}, 1);
  Tensor w = random_tensor({c, c, 3, 3}, 2);
  Tensor b = random_tensor({c}, 3);
  x.set_requires_grad(true);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  Tensor target = random_tensor({1, c, 120, 120}, 4);
  for (auto _ : state) {
    Tensor loss = pssr::ad::mse(pssr::ad::conv2d(x, w, b, 1, 1), target);
    loss.backward();
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c) * c * 120 * 120 * 9 * 3);
}
BENCHMARK(BM_Conv2dBackward)->Arg(16);

void BM_ResizeBicubic(benchmark::State& state) {
  const pssr::img::StereoPair scene = pssr::img::gen_scene(1, 120, 120, 3, 10);
  for (auto _ : state) {
    auto lr = pssr::deg::resize_bicubic(scene.left, 30, 30);
    benchmark::DoNotOptimize(lr.pix.data());
  }
}
BENCHMARK(BM_ResizeBicubic);

void BM_GaussianBlur15(benchmark::State& state) {
  const pssr::img::StereoPair scene = pssr::img::gen_scene(2, 120, 120, 3, 10);
  for (auto _ : state) {
    auto b = pssr::deg::gaussian_blur(scene.left, 2.6, 15);
    benchmark::DoNotOptimize(b.pix.data());
  }
}
BENCHMARK(BM_GaussianBlur15);

void BM_Ssim(benchmark::State& state) {
  const pssr::img::StereoPair scene = pssr::img::gen_scene(3, 120, 120, 3, 10);
  const pssr::img::Image noisy = pssr::deg::add_noise(scene.left, 15.0, 9);
  for (auto _ : state) {
    auto r = pssr::quality::ssim(noisy, scene.left);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_Ssim);

void BM_BlockMatch(benchmark::State& state) {
  const pssr::img::StereoPair scene = pssr::img::gen_scene(4, 120, 120, 3, 10);
  for (auto _ : state) {
    auto d = pssr::quality::block_match_disparity(scene, 7, 16);
    benchmark::DoNotOptimize(d.d.data());
  }
}
BENCHMARK(BM_BlockMatch);

void BM_QaForward120(benchmark::State& state) {
  pssr::qa::QAConfig cfg;
  cfg.widths = {16, 12, 12, 12};
  cfg.head_width = 32;
  cfg.patch_size = 120;
  const pssr::qa::QAModel model = pssr::qa::QAModel::init(cfg, 5);
  const pssr::img::StereoPair scene = pssr::img::gen_scene(6, 120, 120, 3, 10);
  const Tensor l = pssr::img::to_tensor(scene.left);
  const Tensor r = pssr::img::to_tensor(scene.right);
  for (auto _ : state) {
    auto fwd = pssr::qa::qa_forward(model, l, r);
    benchmark::DoNotOptimize(fwd.y.values().data());
  }
}
BENCHMARK(BM_QaForward120);

}  // namespace

BENCHMARK_MAIN();
