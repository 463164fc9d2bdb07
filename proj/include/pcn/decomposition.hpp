#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcn/polsar.hpp"

namespace pcn {

struct PauliComponents {
  double p_odd = 0.0;
  double p_even = 0.0;
  double p_volume = 0.0;

  double total() const { return p_odd + p_even + p_volume; }
};

struct FreemanComponents {
  double p_surface = 0.0;
  double p_double = 0.0;
  double p_volume = 0.0;

  double total() const { return p_surface + p_double + p_volume; }
};

struct YamaguchiComponents {
  double p_surface = 0.0;
  double p_double = 0.0;
  double p_volume = 0.0;
  double p_helix = 0.0;

  double total() const { return p_surface + p_double + p_volume + p_helix; }
};

inline constexpr std::size_t kPf22Size = 22;

/// Frozen layout:
///   [0..5]   |T00| |T11| |T22| |T01| |T02| |T12|
///   [6..11]  |C00| |C11| |C22| |C01| |C02| |C12|
///   [12..14] Pauli odd, even, volume
///   [15..17] Freeman surface, double, volume
///   [18..21] Yamaguchi surface, double, volume, helix
using FeatureVector22 = std::array<double, kPf22Size>;

PauliComponents pauli_decompose(const ScatteringMatrix& s);

/// Three-component model-based decomposition of a covariance matrix.
/// Negative branch powers are clamped to zero and the remaining powers
/// rescaled to the unclamped total.
FreemanComponents freeman_durden(const HermitianMatrix3& c);

/// Four-component decomposition with helix term and the power-ratio
/// selected volume model.
YamaguchiComponents yamaguchi4(const HermitianMatrix3& c);

/// `s` is the centre pixel; `c` and `t` are its averaged covariance and
/// coherence matrices.
FeatureVector22 pf22(const ScatteringMatrix& s, const HermitianMatrix3& c, const HermitianMatrix3& t);

/// PF22 for every pixel of a scene, pixel-major (22 values per pixel).
std::vector<double> pf22_scene(const PolsarScene& scene, int window);

/// Per-channel min/max of feature planes, taken over the pixels where
/// `mask` is nonzero (all pixels when the mask is empty).
struct FeatureScaling {
  std::vector<double> min;
  std::vector<double> max;
};

FeatureScaling fit_feature_scaling(std::span<const double> values, int channels,
                                   std::span<const std::uint8_t> mask = {});
/// Maps each channel onto [0, 1] with the fitted constants. Constant
/// channels map to 0. Values outside the fitted range are not clipped.
void apply_feature_scaling(std::span<double> values, const FeatureScaling& scaling);

/// Canonical volume-scattering covariance (random-orientation dipole cloud)
/// carrying total power `power`.
HermitianMatrix3 volume_model_covariance(double power);

}  // namespace pcn
