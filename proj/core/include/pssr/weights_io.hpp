#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pssr/tensor.hpp"

namespace pssr::ad {

// PSSRW checkpoint format, little-endian:
//   magic "PSSRW" | u32 version | u32 tensor_count
//   per tensor: u32 name_len | name bytes | u32 rank | u32 extents[rank] | f64 values
// Round-trips are bit-exact.
inline constexpr uint32_t kWeightsFormatVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_weights(const std::string& path, const NamedTensors& tensors,
                  uint32_t version = kWeightsFormatVersion);

NamedTensors load_weights(const std::string& path);

}  // namespace pssr::ad
