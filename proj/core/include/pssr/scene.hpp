#pragma once

#include <cstdint>

#include "pssr/image.hpp"

namespace pssr::img {

// Synthetic stereo scene with exact integer disparity: a textured background
// (disparity 0) plus n_shapes textured rectangles, each shifted left in the
// right view by its own disparity. Deterministic in the seed.
StereoPair gen_scene(uint64_t seed, int width, int height, int n_shapes, int max_disparity);

}  // namespace pssr::img
