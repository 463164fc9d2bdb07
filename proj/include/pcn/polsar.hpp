#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace pcn {

using Complex = std::complex<double>;

/// Class id used in label grids for pixels excluded from loss and scoring.
inline constexpr std::uint8_t kIgnoreLabel = 255;

/// One pixel of a fully polarimetric acquisition.
struct ScatteringMatrix {
  Complex hh{}, hv{}, vh{}, vv{};

  bool reciprocal() const { return hv == vh; }
  bool finite() const;

  friend bool operator==(const ScatteringMatrix&, const ScatteringMatrix&) = default;
};

enum class VectorKind { Lexicographic, Pauli };

struct ScatteringVector3 {
  std::array<Complex, 3> v{};
  VectorKind kind = VectorKind::Lexicographic;

  double squared_norm() const;
};

enum class MatrixKind { Covariance, Coherence };

/// 3x3 Hermitian matrix, row-major.
struct HermitianMatrix3 {
  std::array<Complex, 9> m{};
  MatrixKind kind = MatrixKind::Covariance;

  Complex& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
  const Complex& operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

  double trace() const { return m[0].real() + m[4].real() + m[8].real(); }
  bool is_hermitian(double rel_tol = 1e-12) const;
  /// Eigenvalues in ascending order.
  std::array<double, 3> eigenvalues() const;
  bool is_psd() const;
};

/// Row-major grid of scattering matrices with an optional label map.
struct PolsarScene {
  int height = 0;
  int width = 0;
  std::vector<ScatteringMatrix> pixels;
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t size() const { return pixels.size(); }
  const ScatteringMatrix& at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  bool reciprocal() const;
  /// Throws InvalidInput when dimensions, payload or labels are inconsistent.
  void validate(int num_classes = 255) const;
};

template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> cells;

  T& operator()(int r, int c) {
    return cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
  }
  const T& operator()(int r, int c) const {
    return cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
  }
};

using HermitianField = Grid<HermitianMatrix3>;

void check_finite(const ScatteringMatrix& s);

/// k_L = [S_hh, sqrt(2) S_hv, S_vv]. Non-reciprocal inputs use S_hv.
ScatteringVector3 lexicographic_vector(const ScatteringMatrix& s);

/// k_p = [S_hh + S_vv, S_hh - S_vv, 2 S_hv] / sqrt(2).
ScatteringVector3 pauli_vector(const ScatteringMatrix& s);

/// k k^H. Off-diagonal entries are mirrored so the result is exactly Hermitian.
HermitianMatrix3 outer_hermitian(const ScatteringVector3& k);

/// Boxcar mean over window x window neighborhoods with replicated borders.
HermitianField spatial_average(const HermitianField& field, int window);

/// Total power |S_hh|^2 + 2|S_hv|^2 + |S_vv|^2.
double span(const ScatteringMatrix& s);

/// Single-look covariance or coherence field of a scene, averaged with the
/// given window. covariance_field warns once on stderr when the scene is
/// not reciprocal.
HermitianField covariance_field(const PolsarScene& scene, int window);
HermitianField coherence_field(const PolsarScene& scene, int window);

}  // namespace pcn
