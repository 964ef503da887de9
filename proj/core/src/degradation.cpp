#include "pssr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "pssr/rng.hpp"

namespace pssr::deg {

namespace {

using json = nlohmann::json;

constexpr int kAllowedScales[] = {2, 3, 4, 5, 6, 8};

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

const char* to_string(Upsampler u) {
  switch (u) {
    case Upsampler::nearest: return "nearest";
    case Upsampler::bilinear: return "bilinear";
    case Upsampler::bicubic: return "bicubic";
  }
  return "bicubic";
}

Upsampler upsampler_from_string(const std::string& s) {
  if (s == "nearest") return Upsampler::nearest;
  if (s == "bilinear") return Upsampler::bilinear;
  if (s == "bicubic") return Upsampler::bicubic;
  throw std::invalid_argument("unknown upsampler '" + s + "'");
}

void validate_spec(const DegradationSpec& spec) {
  bool ok = false;
  for (int s : kAllowedScales) ok = ok || spec.scale == s;
  if (!ok)
    throw std::invalid_argument("degradation: scale " + std::to_string(spec.scale) +
                                " not in {2,3,4,5,6,8}");
  if (spec.blur_sigma < 0.0) throw std::invalid_argument("degradation: negative blur sigma");
  if (spec.blur_ksize % 2 == 0 || spec.blur_ksize < 1)
    throw std::invalid_argument("degradation: blur ksize must be odd and positive");
  if (spec.noise_level < 0.0 || spec.noise_level > 30.0)
    throw std::invalid_argument("degradation: noise level " + std::to_string(spec.noise_level) +
                                " outside [0,30]");
}

CatalogConfig default_catalog_config() {
  CatalogConfig c;
  c.scales = {2, 3, 4};
  c.blur_sigmas = {0.0, 0.7, 1.2};
  c.noise_levels = {0.0, 15.0, 30.0};
  c.upsamplers = {Upsampler::bicubic};
  return c;
}

Catalog build_catalog(const CatalogConfig& config) {
  if (config.scales.empty() || config.blur_sigmas.empty() || config.noise_levels.empty() ||
      config.upsamplers.empty())
    throw std::invalid_argument("catalog: empty axis in config");
  Catalog cat;
  for (int scale : config.scales)
    for (double sigma : config.blur_sigmas)
      for (double noise : config.noise_levels)
        for (Upsampler up : config.upsamplers) {
          DegradationSpec spec;
          spec.scale = scale;
          spec.blur_sigma = sigma;
          spec.blur_ksize = config.blur_ksize;
          spec.noise_level = noise;
          spec.upsampler = up;
          validate_spec(spec);
          cat.specs.push_back(spec);
        }
  return cat;
}

CatalogConfig catalog_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  CatalogConfig c;
  c.scales = j.at("scales").get<std::vector<int>>();
  c.blur_sigmas = j.at("blur_sigmas").get<std::vector<double>>();
  c.noise_levels = j.at("noise_levels").get<std::vector<double>>();
  for (const auto& u : j.at("upsamplers")) c.upsamplers.push_back(upsampler_from_string(u));
  c.blur_ksize = j.value("blur_ksize", 15);
  return c;
}

std::string catalog_config_to_json(const CatalogConfig& config) {
  json j;
  j["scales"] = config.scales;
  j["blur_sigmas"] = config.blur_sigmas;
  j["noise_levels"] = config.noise_levels;
  std::vector<std::string> ups;
  for (Upsampler u : config.upsamplers) ups.emplace_back(to_string(u));
  j["upsamplers"] = ups;
  j["blur_ksize"] = config.blur_ksize;
  return j.dump(2);
}

img::Image resize_nearest(const img::Image& im, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: output dims must be >= 1");
  img::Image out = img::Image::create(out_w, out_h, im.channels);
  const double sx = static_cast<double>(im.width) / out_w;
  const double sy = static_cast<double>(im.height) / out_h;
  for (int c = 0; c < im.channels; ++c)
    for (int r = 0; r < out_h; ++r) {
      const int src_r = clampi(static_cast<int>(std::floor((r + 0.5) * sy)), 0, im.height - 1);
      for (int col = 0; col < out_w; ++col) {
        const int src_c = clampi(static_cast<int>(std::floor((col + 0.5) * sx)), 0, im.width - 1);
        out.at(c, r, col) = im.at(c, src_r, src_c);
      }
    }
  return out;
}

img::Image resize_bilinear(const img::Image& im, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: output dims must be >= 1");
  img::Image out = img::Image::create(out_w, out_h, im.channels);
  const double sx = static_cast<double>(im.width) / out_w;
  const double sy = static_cast<double>(im.height) / out_h;
  for (int c = 0; c < im.channels; ++c)
    for (int r = 0; r < out_h; ++r) {
      const double fy = (r + 0.5) * sy - 0.5;
      const int y0 = static_cast<int>(std::floor(fy));
      const double ty = fy - y0;
      const int ya = clampi(y0, 0, im.height - 1), yb = clampi(y0 + 1, 0, im.height - 1);
      for (int col = 0; col < out_w; ++col) {
        const double fx = (col + 0.5) * sx - 0.5;
        const int x0 = static_cast<int>(std::floor(fx));
        const double tx = fx - x0;
        const int xa = clampi(x0, 0, im.width - 1), xb = clampi(x0 + 1, 0, im.width - 1);
        const double top = (1.0 - tx) * im.at(c, ya, xa) + tx * im.at(c, ya, xb);
        const double bot = (1.0 - tx) * im.at(c, yb, xa) + tx * im.at(c, yb, xb);
        out.at(c, r, col) = clamp01((1.0 - ty) * top + ty * bot);
      }
    }
  return out;
}

void bicubic_weights(double f, double w[4]) {
  // Keys kernel, a = -0.5; taps at distances 1+f, f, 1-f, 2-f.
  const double a = -0.5;
  auto k = [a](double t) {
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
  };
  w[0] = k(1.0 + f);
  w[1] = k(f);
  w[2] = k(1.0 - f);
  w[3] = k(2.0 - f);
}

img::Image resize_bicubic(const img::Image& im, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: output dims must be >= 1");

  // Separable: horizontal pass (unclipped intermediate), then vertical.
  img::Image mid;
  mid.width = out_w;
  mid.height = im.height;
  mid.channels = im.channels;
  mid.pix.assign(static_cast<size_t>(out_w) * im.height * im.channels, 0.0);

  const double sx = static_cast<double>(im.width) / out_w;
  std::vector<int> xi(static_cast<size_t>(out_w) * 4);
  std::vector<double> xw(static_cast<size_t>(out_w) * 4);
  for (int col = 0; col < out_w; ++col) {
    const double s = (col + 0.5) * sx - 0.5;
    const int base = static_cast<int>(std::floor(s));
    double w[4];
    bicubic_weights(s - base, w);
    for (int t = 0; t < 4; ++t) {
      xi[static_cast<size_t>(col) * 4 + t] = clampi(base - 1 + t, 0, im.width - 1);
      xw[static_cast<size_t>(col) * 4 + t] = w[t];
    }
  }
  for (int c = 0; c < im.channels; ++c)
    for (int r = 0; r < im.height; ++r)
      for (int col = 0; col < out_w; ++col) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t)
          acc += xw[static_cast<size_t>(col) * 4 + t] * im.at(c, r, xi[static_cast<size_t>(col) * 4 + t]);
        mid.at(c, r, col) = acc;
      }

  img::Image out = img::Image::create(out_w, out_h, im.channels);
  const double sy = static_cast<double>(im.height) / out_h;
  for (int r = 0; r < out_h; ++r) {
    const double s = (r + 0.5) * sy - 0.5;
    const int base = static_cast<int>(std::floor(s));
    double w[4];
    bicubic_weights(s - base, w);
    int yi[4];
    for (int t = 0; t < 4; ++t) yi[t] = clampi(base - 1 + t, 0, im.height - 1);
    for (int c = 0; c < im.channels; ++c)
      for (int col = 0; col < out_w; ++col) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t) acc += w[t] * mid.at(c, yi[t], col);
        out.at(c, r, col) = clamp01(acc);
      }
  }
  return out;
}

img::Image resize(const img::Image& im, int out_w, int out_h, Upsampler u) {
  switch (u) {
    case Upsampler::nearest: return resize_nearest(im, out_w, out_h);
    case Upsampler::bilinear: return resize_bilinear(im, out_w, out_h);
    case Upsampler::bicubic: return resize_bicubic(im, out_w, out_h);
  }
  return resize_bicubic(im, out_w, out_h);
}

img::Image gaussian_blur(const img::Image& im, double sigma, int ksize) {
  if (ksize % 2 == 0 || ksize < 1)
    throw std::invalid_argument("gaussian_blur: ksize must be odd, got " + std::to_string(ksize));
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: negative sigma");
  if (sigma == 0.0) return im;

  const int half = ksize / 2;
  std::vector<double> kernel(static_cast<size_t>(ksize));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  // Horizontal, then vertical; edge clamp.
  img::Image mid = img::Image::create(im.width, im.height, im.channels);
  for (int c = 0; c < im.channels; ++c)
    for (int r = 0; r < im.height; ++r)
      for (int col = 0; col < im.width; ++col) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i)
          acc += kernel[static_cast<size_t>(i + half)] * im.at(c, r, clampi(col + i, 0, im.width - 1));
        mid.at(c, r, col) = acc;
      }
  img::Image out = img::Image::create(im.width, im.height, im.channels);
  for (int c = 0; c < im.channels; ++c)
    for (int r = 0; r < im.height; ++r)
      for (int col = 0; col < im.width; ++col) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i)
          acc += kernel[static_cast<size_t>(i + half)] * mid.at(c, clampi(r + i, 0, im.height - 1), col);
        out.at(c, r, col) = clamp01(acc);
      }
  return out;
}

img::Image add_noise(const img::Image& im, double level, uint64_t seed) {
  if (level < 0.0) throw std::invalid_argument("add_noise: negative level");
  if (level == 0.0) return im;
  const double std01 = level / 255.0;
  SplitMix64 rng(seed);
  img::Image out = im;
  for (double& v : out.pix) v = clamp01(v + std01 * rng.normal());
  return out;
}

img::StereoPair degrade(const img::StereoPair& hr, const DegradationSpec& spec) {
  img::check_pair(hr);
  validate_spec(spec);
  if (hr.left.width % spec.scale != 0 || hr.left.height % spec.scale != 0)
    throw std::invalid_argument("degrade: HR dims " + std::to_string(hr.left.width) + "x" +
                                std::to_string(hr.left.height) + " not divisible by scale " +
                                std::to_string(spec.scale) + " (crop first)");

  auto one_view = [&](const img::Image& view, uint64_t view_seed) {
    img::Image x = view;
    if (spec.blur_sigma > 0.0) x = gaussian_blur(x, spec.blur_sigma, spec.blur_ksize);
    x = resize_bicubic(x, view.width / spec.scale, view.height / spec.scale);
    x = add_noise(x, spec.noise_level, view_seed);
    return x;
  };

  img::StereoPair lr;
  lr.left = one_view(hr.left, derive_seed(spec.seed, 0));
  lr.right = one_view(hr.right, derive_seed(spec.seed, 1));
  return lr;
}

img::StereoPair restore_naive(const img::StereoPair& lr, const DegradationSpec& spec) {
  img::check_pair(lr);
  img::StereoPair hr;
  hr.left = resize(lr.left, lr.left.width * spec.scale, lr.left.height * spec.scale, spec.upsampler);
  hr.right = resize(lr.right, lr.right.width * spec.scale, lr.right.height * spec.scale, spec.upsampler);
  return hr;
}

img::StereoPair make_version(const img::StereoPair& hr_ref, DegradationSpec spec,
                             uint64_t base_seed, int ref_index, int version_index) {
  spec.seed = derive_seed(base_seed, static_cast<uint64_t>(ref_index),
                          static_cast<uint64_t>(version_index));
  img::StereoPair version = restore_naive(degrade(hr_ref, spec), spec);
  return version;
}

std::string version_filename(int ref_index, int version_index, bool left) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "ref%03d_v%03d_%c.ppm", ref_index, version_index,
                left ? 'L' : 'R');
  return buf;
}

}  // namespace pssr::deg
