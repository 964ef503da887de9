#pragma once

#include <string>
#include <vector>

#include "pssr/image.hpp"

namespace pssr::quality {

enum class Polarity { higher_better, lower_better };

const char* to_string(Polarity p);

struct MetricResult {
  std::string name;
  double value = 0.0;
  Polarity polarity = Polarity::higher_better;

  std::string csv_row() const;  // name,value,polarity
};

// 10*log10(1/MSE) on [0,1] pixels, capped at 100 dB (identical images hit
// the cap exactly).
inline constexpr double kPsnrCap = 100.0;
MetricResult psnr(const img::Image& a, const img::Image& b);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01 K2=0.03 L=1,
// computed on the luma of color inputs over the valid (unpadded) region.
MetricResult ssim(const img::Image& a, const img::Image& b);

double pair_psnr(const img::StereoPair& a, const img::StereoPair& b);  // mean of views
double pair_ssim(const img::StereoPair& a, const img::StereoPair& b);

// left - right, range [-1,1]; in-memory only (not PPM-storable as is).
img::Image diff_map(const img::StereoPair& pair);

struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<double> d;
  std::vector<uint8_t> valid;

  double& at(int r, int c) { return d[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return d[static_cast<size_t>(r) * width + c]; }
  bool is_valid(int r, int c) const { return valid[static_cast<size_t>(r) * width + c] != 0; }
};

// All-valid map from a single-channel disparity image (e.g. gen_scene gt).
DisparityMap to_disparity_map(const img::Image& disparity_image);

// Integer SAD block matching on luma, searching leftward in the right view.
// Ties break toward the smaller disparity; window-clipped borders and
// pixels with no admissible candidate are invalid.
DisparityMap block_match_disparity(const img::StereoPair& pair, int window, int max_search);

// Mean absolute disparity error over valid(est) AND valid(gt) pixels.
MetricResult epe(const DisparityMap& est, const DisparityMap& gt);

}  // namespace pssr::quality
