#pragma once

// Polarimetric scattering coding: a sign-position encoding that maps a
// complex value onto a nonnegative, sparse 2x2 real block, and a scattering
// matrix onto a 4x4 tile of such blocks. Also known as "sparse scattering
// coding" (SSC); the features it yields are sometimes labelled SSCF.
//
// Block layout: column 0 holds the real part, column 1 the imaginary part;
// row 0 holds nonnegative parts and row 1 the magnitude of negative parts.
// Zero routes to row 0 for the real part and row 1 for the imaginary part.

#include <array>
#include <vector>

#include "pcn/polsar.hpp"

namespace pcn {

struct CodedBlock {
  std::array<std::array<double, 2>, 2> b{};

  friend bool operator==(const CodedBlock&, const CodedBlock&) = default;
};

using CodedTile = std::array<std::array<double, 4>, 4>;

/// Row-major (4 * height) x (4 * width) matrix of per-pixel tiles.
struct CodedMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double& operator()(int r, int c) {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }
};

CodedBlock encode_complex(Complex z);
Complex decode_complex(const CodedBlock& block);

/// Quadrants: [0:2,0:2] HH, [0:2,2:4] HV, [2:4,0:2] VH, [2:4,2:4] VV.
CodedTile encode_matrix(const ScatteringMatrix& s);
ScatteringMatrix decode_matrix(const CodedTile& tile);

CodedMatrix encode_scene(const PolsarScene& scene);
/// Inverse of encode_scene. The result carries no labels.
PolsarScene decode_scene(const CodedMatrix& coded);

}  // namespace pcn
