#include "pssr/quality.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pssr::quality {

namespace {

void check_same(const char* op, const img::Image& a, const img::Image& b) {
  if (!img::same_shape(a, b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.width) +
                                "x" + std::to_string(a.height) + "x" + std::to_string(a.channels) +
                                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                                "x" + std::to_string(b.channels));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(Polarity p) {
  return p == Polarity::higher_better ? "higher_better" : "lower_better";
}

std::string MetricResult::csv_row() const {
  return name + "," + fmt_double(value) + "," + to_string(polarity);
}

MetricResult psnr(const img::Image& a, const img::Image& b) {
  check_same("psnr", a, b);
  double acc = 0.0;
  for (size_t i = 0; i < a.pix.size(); ++i) {
    const double d = a.pix[i] - b.pix[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.pix.size());
  double value = kPsnrCap;
  if (mse > 0.0) value = std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
  return {"psnr", value, Polarity::higher_better};
}

MetricResult ssim(const img::Image& a, const img::Image& b) {
  check_same("ssim", a, b);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim: image " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " smaller than 11x11 window");

  const img::Image x = to_gray(a);
  const img::Image y = to_gray(b);

  double kernel[kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double t = i - kWin / 2;
    kernel[i] = std::exp(-0.5 * t * t / (kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  double total = 0.0;
  int64_t count = 0;
  for (int r = 0; r + kWin <= a.height; ++r) {
    for (int c = 0; c + kWin <= a.width; ++c) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double w = kernel[i] * kernel[j];
          const double xv = x.at(0, r + i, c + j);
          const double yv = y.at(0, r + i, c + j);
          mx += w * xv;
          my += w * yv;
          mxx += w * xv * xv;
          myy += w * yv * yv;
          mxy += w * xv * yv;
        }
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cxy = mxy - mx * my;
      const double s = ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) /
                       ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      total += s;
      ++count;
    }
  }
  return {"ssim", total / static_cast<double>(count), Polarity::higher_better};
}

double pair_psnr(const img::StereoPair& a, const img::StereoPair& b) {
  return 0.5 * (psnr(a.left, b.left).value + psnr(a.right, b.right).value);
}

double pair_ssim(const img::StereoPair& a, const img::StereoPair& b) {
  return 0.5 * (ssim(a.left, b.left).value + ssim(a.right, b.right).value);
}

img::Image diff_map(const img::StereoPair& pair) {
  img::check_pair(pair);
  img::Image out = pair.left;
  for (size_t i = 0; i < out.pix.size(); ++i) out.pix[i] -= pair.right.pix[i];
  return out;
}

DisparityMap to_disparity_map(const img::Image& disparity_image) {
  if (disparity_image.channels != 1)
    throw std::invalid_argument("disparity map: expected single channel");
  DisparityMap m;
  m.width = disparity_image.width;
  m.height = disparity_image.height;
  m.d = disparity_image.pix;
  m.valid.assign(m.d.size(), 1);
  return m;
}

DisparityMap block_match_disparity(const img::StereoPair& pair, int window, int max_search) {
  img::check_pair(pair);
  if (window % 2 == 0 || window < 1)
    throw std::invalid_argument("block_match: window must be odd, got " + std::to_string(window));
  if (max_search < 0 || max_search >= pair.left.width)
    throw std::invalid_argument("block_match: max_search must lie in [0, width)");

  const img::Image left = to_gray(pair.left);
  const img::Image right = to_gray(pair.right);
  const int h = left.height, w = left.width, half = window / 2;

  DisparityMap m;
  m.width = w;
  m.height = h;
  m.d.assign(static_cast<size_t>(w) * h, 0.0);
  m.valid.assign(static_cast<size_t>(w) * h, 0);

  for (int r = half; r < h - half; ++r) {
    for (int c = half; c < w - half; ++c) {
      const int dmax = std::min(max_search, c - half);
      double best = 0.0;
      int best_d = 0;
      bool first = true;
      for (int d = 0; d <= dmax; ++d) {
        double sad = 0.0;
        for (int i = -half; i <= half; ++i) {
          const double* lrow = &left.pix[static_cast<size_t>(r + i) * w];
          const double* rrow = &right.pix[static_cast<size_t>(r + i) * w];
          for (int j = -half; j <= half; ++j) sad += std::abs(lrow[c + j] - rrow[c - d + j]);
        }
        if (first || sad < best) {  // strict < keeps the smaller disparity on ties
          best = sad;
          best_d = d;
          first = false;
        }
      }
      m.at(r, c) = best_d;
      m.valid[static_cast<size_t>(r) * w + c] = 1;
    }
  }
  return m;
}

MetricResult epe(const DisparityMap& est, const DisparityMap& gt) {
  if (est.width != gt.width || est.height != gt.height)
    throw std::invalid_argument("epe: dimension mismatch " + std::to_string(est.width) + "x" +
                                std::to_string(est.height) + " vs " + std::to_string(gt.width) +
                                "x" + std::to_string(gt.height));
  double acc = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < est.d.size(); ++i) {
    if (est.valid[i] && gt.valid[i]) {
      acc += std::abs(est.d[i] - gt.d[i]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("epe: no jointly valid pixels");
  return {"epe", acc / static_cast<double>(count), Polarity::lower_better};
}

}  // namespace pssr::quality
