#pragma once

// File formats.
//
// PSC1 scene container, little-endian:
//   "PSC1" | u32 height | u32 width | u32 flags | payload
// With flags == 0 the payload is height * width pixels, each 8 f32 values
// (re, im) for HH, HV, VH, VV, row-major. With the planes flag set a u32
// channel count follows the header and each pixel carries that many f32.
//
// PCD1 coded matrix: "PCD1" | u32 rows | u32 cols | rows * cols f32.
// Labels: binary PGM (P5), 255 marks ignored pixels.
// Classification maps: binary PPM (P6) with a fixed palette.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcn/coding.hpp"
#include "pcn/polsar.hpp"

namespace pcn {

inline constexpr std::uint32_t kSceneFlagPlanes = 1u;

void save_scene(const PolsarScene& scene, const std::filesystem::path& path);
/// Labels are not part of the container and stay empty.
PolsarScene load_scene(const std::filesystem::path& path);

std::vector<char> encode_scene_file(const PolsarScene& scene);
PolsarScene decode_scene_file(const std::vector<char>& bytes);

struct PlaneFile {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;  // pixel-major
};

void save_planes(const std::filesystem::path& path, int height, int width, int channels,
                 std::span<const double> values);
PlaneFile load_planes(const std::filesystem::path& path);

void save_coded(const CodedMatrix& coded, const std::filesystem::path& path);
CodedMatrix load_coded(const std::filesystem::path& path);

struct LabelGrid {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;
};

void save_label_pgm(const LabelGrid& grid, const std::filesystem::path& path);
LabelGrid load_label_pgm(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Sixteen distinguishable colours; class c uses entry c.
const std::vector<Rgb>& default_palette();

/// P6 image bytes; kIgnoreLabel renders black, ids beyond the palette raise
/// InvalidLabel.
std::vector<char> render_map(const LabelGrid& grid, const std::vector<Rgb>& palette = default_palette());
void save_map(const LabelGrid& grid, const std::filesystem::path& path,
              const std::vector<Rgb>& palette = default_palette());

}  // namespace pcn
