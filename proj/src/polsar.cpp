#include "pcn/polsar.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "pcn/error.hpp"

namespace pcn {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2 = 0.70710678118654752440;

bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void warn_non_reciprocal(const PolsarScene& scene) {
  if (!scene.reciprocal()) {
    std::cerr << "warning: scene is not reciprocal (S_hv != S_vh); vectorizations use S_hv\n";
  }
}

template <typename MakeVector>
HermitianField single_look_field(const PolsarScene& scene, int window, MakeVector make) {
  scene.validate();
  HermitianField field{scene.height, scene.width, {}};
  field.cells.reserve(scene.size());
  for (const auto& s : scene.pixels) field.cells.push_back(outer_hermitian(make(s)));
  return spatial_average(field, window);
}

}  // namespace

bool ScatteringMatrix::finite() const {
  return pcn::finite(hh) && pcn::finite(hv) && pcn::finite(vh) && pcn::finite(vv);
}

double ScatteringVector3::squared_norm() const {
  return std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]);
}

bool HermitianMatrix3::is_hermitian(double rel_tol) const {
  double scale = 0.0;
  for (const auto& z : m) scale = std::max(scale, std::abs(z));
  const double tol = rel_tol * std::max(scale, 1.0);
  for (int r = 0; r < 3; ++r) {
    if (std::abs((*this)(r, r).imag()) > tol) return false;
    for (int c = r + 1; c < 3; ++c) {
      if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol) return false;
    }
  }
  return true;
}

std::array<double, 3> HermitianMatrix3::eigenvalues() const {
  Eigen::Matrix3cd a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a(r, c) = (*this)(r, c);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(a, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

bool HermitianMatrix3::is_psd() const {
  for (const auto& z : m)
    if (!pcn::finite(z)) return false;
  if (!is_hermitian(1e-9)) return false;
  const double tr = trace();
  for (int i = 0; i < 3; ++i)
    if ((*this)(i, i).real() < -1e-12 * std::max(1.0, std::abs(tr))) return false;
  return eigenvalues()[0] >= -1e-9 * std::max(tr, 0.0) - 1e-300;
}

bool PolsarScene::reciprocal() const {
  return std::all_of(pixels.begin(), pixels.end(), [](const auto& s) { return s.reciprocal(); });
}

void PolsarScene::validate(int num_classes) const {
  if (height <= 0 || width <= 0) {
    fail(ErrorCode::InvalidInput, "scene dimensions must be positive, got " + std::to_string(height) + "x" +
                                      std::to_string(width));
  }
  const auto expected = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if (pixels.size() != expected) {
    fail(ErrorCode::InvalidInput, "scene payload holds " + std::to_string(pixels.size()) + " pixels, expected " +
                                      std::to_string(expected));
  }
  for (const auto& s : pixels) check_finite(s);
  if (labels) {
    if (labels->size() != expected) fail(ErrorCode::InvalidInput, "label grid size does not match scene");
    for (auto l : *labels) {
      if (l != kIgnoreLabel && l >= num_classes)
        fail(ErrorCode::InvalidLabel, "class id " + std::to_string(l) + " out of range");
    }
  }
}

void check_finite(const ScatteringMatrix& s) {
  if (!s.finite()) fail(ErrorCode::InvalidInput, "scattering matrix has a non-finite entry");
}

ScatteringVector3 lexicographic_vector(const ScatteringMatrix& s) {
  check_finite(s);
  return {{s.hh, kSqrt2 * s.hv, s.vv}, VectorKind::Lexicographic};
}

ScatteringVector3 pauli_vector(const ScatteringMatrix& s) {
  check_finite(s);
  return {{kInvSqrt2 * (s.hh + s.vv), kInvSqrt2 * (s.hh - s.vv), kInvSqrt2 * (2.0 * s.hv)}, VectorKind::Pauli};
}

HermitianMatrix3 outer_hermitian(const ScatteringVector3& k) {
  for (const auto& z : k.v)
    if (!finite(z)) fail(ErrorCode::InvalidInput, "scattering vector has a non-finite entry");
  HermitianMatrix3 out;
  out.kind = k.kind == VectorKind::Lexicographic ? MatrixKind::Covariance : MatrixKind::Coherence;
  for (int r = 0; r < 3; ++r) {
    out(r, r) = Complex(std::norm(k.v[static_cast<std::size_t>(r)]), 0.0);
    for (int c = r + 1; c < 3; ++c) {
      const Complex z = k.v[static_cast<std::size_t>(r)] * std::conj(k.v[static_cast<std::size_t>(c)]);
      out(r, c) = z;
      out(c, r) = std::conj(z);
    }
  }
  return out;
}

HermitianField spatial_average(const HermitianField& field, int window) {
  if (window < 1 || window % 2 == 0) {
    fail(ErrorCode::InvalidInput, "averaging window must be odd and >= 1, got " + std::to_string(window));
  }
  if (window > std::min(field.height, field.width)) {
    fail(ErrorCode::InvalidInput, "averaging window " + std::to_string(window) + " exceeds the " +
                                      std::to_string(field.height) + "x" + std::to_string(field.width) + " grid");
  }
  if (window == 1) return field;

  const int half = window / 2;
  const double inv = 1.0 / static_cast<double>(window * window);
  HermitianField out{field.height, field.width, std::vector<HermitianMatrix3>(field.cells.size())};
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      HermitianMatrix3 acc;
      acc.kind = field(r, c).kind;
      for (int dr = -half; dr <= half; ++dr) {
        const int rr = std::clamp(r + dr, 0, field.height - 1);
        for (int dc = -half; dc <= half; ++dc) {
          const int cc = std::clamp(c + dc, 0, field.width - 1);
          const auto& src = field(rr, cc);
          for (std::size_t i = 0; i < 9; ++i) acc.m[i] += src.m[i];
        }
      }
      for (auto& z : acc.m) z *= inv;
      out(r, c) = acc;
    }
  }
  return out;
}

double span(const ScatteringMatrix& s) {
  check_finite(s);
  return std::norm(s.hh) + 2.0 * std::norm(s.hv) + std::norm(s.vv);
}

HermitianField covariance_field(const PolsarScene& scene, int window) {
  warn_non_reciprocal(scene);
  return single_look_field(scene, window, lexicographic_vector);
}

HermitianField coherence_field(const PolsarScene& scene, int window) {
  return single_look_field(scene, window, pauli_vector);
}

}  // namespace pcn
