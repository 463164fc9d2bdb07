#pragma once

// Model checkpoint, little-endian:
//   "PCNCKPT1" | u32 version | u64 seed | string manifest
//   u32 layer count | per layer: string name, i32 kernels, in_depth, kernel,
//   stride, pad_before, pad_after, f64 weights..., f64 bias...
//   8 f64 raw_min | 8 f64 raw_max | f64 coded_scale
//
// The manifest is the key=value config followed by one line per layer
// ("layer name=conv kernels,in_depth,k,stride,pad_before,pad_after").

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcn/network.hpp"

namespace pcn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> serialize_model(const PcnModel& model);
PcnModel deserialize_model(const std::vector<char>& bytes);

void save_model(const PcnModel& model, const std::filesystem::path& path);
PcnModel load_model(const std::filesystem::path& path);

}  // namespace pcn
