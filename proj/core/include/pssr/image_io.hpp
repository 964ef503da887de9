#pragma once

#include <string>

#include "pssr/image.hpp"

namespace pssr::img {

// Binary PPM (P6, maxval 255). Pixels quantize to bytes on save; a
// save -> load -> save cycle reproduces the byte stream exactly.
Image load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Image& im);

// PFM (Pf, single channel, little-endian scale < 0, bottom-up rows).
// Values round-trip float32-exact.
Image load_pfm(const std::string& path);
void save_pfm(const std::string& path, const Image& im);

}  // namespace pssr::img
