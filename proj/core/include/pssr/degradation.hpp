#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pssr/image.hpp"

namespace pssr::deg {

enum class Upsampler { nearest, bilinear, bicubic };

const char* to_string(Upsampler u);
Upsampler upsampler_from_string(const std::string& s);

// One distortion recipe. Applying the same spec to the same pair twice
// yields bit-identical output.
struct DegradationSpec {
  int scale = 2;               // one of {2,3,4,5,6,8}
  double blur_sigma = 0.0;     // 0 disables the blur stage
  int blur_ksize = 15;
  double noise_level = 0.0;    // 8-bit scale; std in [0,1] units is level/255
  Upsampler upsampler = Upsampler::bicubic;
  uint64_t seed = 0;
};

void validate_spec(const DegradationSpec& spec);

struct Catalog {
  std::vector<DegradationSpec> specs;  // version index j
};

struct CatalogConfig {
  std::vector<int> scales;
  std::vector<double> blur_sigmas;
  std::vector<double> noise_levels;
  std::vector<Upsampler> upsamplers;
  int blur_ksize = 15;
};

// Desk-scale default: {2,3,4} x {0, 0.7, 1.2} x {0, 15, 30} x {bicubic} = 27.
CatalogConfig default_catalog_config();

// Cartesian product in (scale, blur, noise, upsampler) nesting order.
Catalog build_catalog(const CatalogConfig& config);

CatalogConfig catalog_config_from_json(const std::string& json_text);
std::string catalog_config_to_json(const CatalogConfig& config);

// Resampling. Source coordinate convention: s = (d + 0.5) * in/out - 0.5,
// samples clamped at the edges, output clipped to [0,1].
img::Image resize_nearest(const img::Image& im, int out_w, int out_h);
img::Image resize_bilinear(const img::Image& im, int out_w, int out_h);
img::Image resize_bicubic(const img::Image& im, int out_w, int out_h);  // Keys a = -0.5
img::Image resize(const img::Image& im, int out_w, int out_h, Upsampler u);

// The four Keys kernel weights for the taps around source coordinate s
// (fractional part f = s - floor(s)); exposed for direct verification.
void bicubic_weights(double f, double w[4]);

// Separable Gaussian, kernel truncated at ksize taps and renormalized to
// sum 1; edge-clamped. sigma = 0 is the identity.
img::Image gaussian_blur(const img::Image& im, double sigma, int ksize);

// Additive i.i.d. Gaussian noise (SplitMix64 + Box-Muller), clipped to [0,1].
img::Image add_noise(const img::Image& im, double level, uint64_t seed);

// blur (if sigma > 0) -> bicubic downscale -> noise, same recipe applied to
// both views with per-view sub-seeds. HR dims must be divisible by scale.
img::StereoPair degrade(const img::StereoPair& hr, const DegradationSpec& spec);

// Upsample back to HR size with spec.upsampler: the distorted version whose
// quality gets labeled.
img::StereoPair restore_naive(const img::StereoPair& lr, const DegradationSpec& spec);

// degrade + restore with the spec's seed replaced by derive_seed(base, i, j).
img::StereoPair make_version(const img::StereoPair& hr_ref, DegradationSpec spec,
                             uint64_t base_seed, int ref_index, int version_index);

// ref{i:03}_v{j:03}_{L|R}.ppm
std::string version_filename(int ref_index, int version_index, bool left);

}  // namespace pssr::deg
