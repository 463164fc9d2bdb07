#pragma once

// Synthetic single-look scenes with class-dependent covariance models.
//
// Spec keys (key=value):
//   height, width, num_classes, seed, looks
//   class.N.cov = c11,c22,c33,re13,im13,re12,im12,re23,im23  (lexicographic C)
//   geometry = voronoi:K        K sites, site i belongs to class i mod C
//   rect.N = class,row0,col0,row1,col1   half-open, later rectangles win
// Exactly one of voronoi geometry or rectangles is used; rectangles must
// cover the scene.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcn/config.hpp"
#include "pcn/polsar.hpp"

namespace pcn {

struct SynthRect {
  int class_id = 0;
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;
};

struct SynthSpec {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<HermitianMatrix3> covariances;
  int voronoi_sites = 0;
  std::vector<SynthRect> rects;
  int looks = 1;
  std::uint64_t seed = 1;

  /// InvalidInput on non-Hermitian or non-PSD models, bad geometry or sizes.
  void validate() const;
};

SynthSpec synth_spec_from_key_values(const KeyValues& values);
SynthSpec read_synth_spec(const std::filesystem::path& path);

/// Label of every pixel from the region geometry alone. A class without
/// any pixel raises InvalidInput.
std::vector<std::uint8_t> region_labels(const SynthSpec& spec);

struct SynthScene {
  PolsarScene scene;
  std::vector<std::uint8_t> labels;
};

/// Each pixel draws k_L = L g with L L^H equal to its class model and g a
/// standard complex Gaussian vector; with looks > 1 the draws are averaged
/// and rescaled by 1/sqrt(looks), which keeps E[k k^H] at the model.
/// Values are rounded to 32-bit so a saved scene reloads identically.
/// Randomness is keyed by (seed, pixel, look), so the result does not
/// depend on evaluation order.
SynthScene generate_synthetic_scene(const SynthSpec& spec);

/// Maximum-likelihood classifier for complex Gaussian vectors:
/// argmin_c ln det(C_c) + k^H C_c^{-1} k per pixel, ties to the lower id.
std::vector<std::uint8_t> wishart_classify(const PolsarScene& scene, const std::vector<HermitianMatrix3>& models);

}  // namespace pcn
