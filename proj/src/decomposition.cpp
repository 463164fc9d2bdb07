#include "pcn/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcn/error.hpp"

namespace pcn {

namespace {

// Covariance entries left for the surface / double-bounce split after the
// volume (and helix) contributions are removed.
struct Residual {
  double c11 = 0.0;
  double c33 = 0.0;
  Complex c13{};
};

struct SurfaceDouble {
  double surface = 0.0;
  double dbl = 0.0;
};

// Volume model weights on (C11, C13, C33); C22 takes the rest of unit power.
struct VolumeModel {
  double w11, w13, w33;
};

constexpr VolumeModel kSymmetricVolume{3.0 / 8.0, 1.0 / 8.0, 3.0 / 8.0};
constexpr VolumeModel kHorizontalVolume{8.0 / 15.0, 2.0 / 15.0, 3.0 / 15.0};
constexpr VolumeModel kVerticalVolume{3.0 / 15.0, 2.0 / 15.0, 8.0 / 15.0};

void require_psd(const HermitianMatrix3& c) {
  if (!c.is_psd()) fail(ErrorCode::InvalidInput, "decomposition input is not a Hermitian PSD matrix");
}

// Surface-dominant branch fixes alpha = -1, double-bounce branch fixes
// beta = 1; either way surface + double == c11 + c33.
SurfaceDouble split_surface_double(const Residual& r) {
  const double det = r.c11 * r.c33 - std::norm(r.c13);
  const double sum = r.c11 + r.c33;
  if (r.c13.real() >= 0.0) {
    const double denom = sum + 2.0 * r.c13.real();
    const double fd = denom > 0.0 ? det / denom : 0.0;
    return {sum - 2.0 * fd, 2.0 * fd};
  }
  const double denom = sum - 2.0 * r.c13.real();
  const double fs = denom > 0.0 ? det / denom : 0.0;
  return {2.0 * fs, sum - 2.0 * fs};
}

// Clamps negative powers to zero and rescales the survivors to the
// unclamped total.
template <std::size_t N>
std::array<double, N> clamp_powers(std::array<double, N> p) {
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) return {};
  double kept = 0.0;
  for (double& v : p) {
    v = std::max(v, 0.0);
    kept += v;
  }
  if (kept != total) {
    const double scale = total / kept;
    for (double& v : p) v *= scale;
  }
  return p;
}

Residual remove_volume_and_helix(const HermitianMatrix3& c, const VolumeModel& model, double p_volume,
                                 double p_helix) {
  return {c(0, 0).real() - model.w11 * p_volume - 0.25 * p_helix,
          c(2, 2).real() - model.w33 * p_volume - 0.25 * p_helix,
          c(0, 2) - model.w13 * p_volume + 0.25 * p_helix};
}

}  // namespace

PauliComponents pauli_decompose(const ScatteringMatrix& s) {
  check_finite(s);
  if (!s.reciprocal()) fail(ErrorCode::InvalidInput, "Pauli decomposition needs a reciprocal pixel (S_hv == S_vh)");
  const auto k = pauli_vector(s);
  return {std::norm(k.v[0]), std::norm(k.v[1]), std::norm(k.v[2])};
}

HermitianMatrix3 volume_model_covariance(double power) {
  HermitianMatrix3 c;
  c(0, 0) = 3.0 * power / 8.0;
  c(1, 1) = 2.0 * power / 8.0;
  c(2, 2) = 3.0 * power / 8.0;
  c(0, 2) = power / 8.0;
  c(2, 0) = power / 8.0;
  return c;
}

FreemanComponents freeman_durden(const HermitianMatrix3& c) {
  require_psd(c);
  // Cross-pol power belongs entirely to the volume mechanism: C22 = Pv / 4.
  const double p_volume = 4.0 * c(1, 1).real();
  const auto split = split_surface_double(remove_volume_and_helix(c, kSymmetricVolume, p_volume, 0.0));
  const auto p = clamp_powers<3>({split.surface, split.dbl, p_volume});
  return {p[0], p[1], p[2]};
}

YamaguchiComponents yamaguchi4(const HermitianMatrix3& c) {
  require_psd(c);
  const double c11 = c(0, 0).real();
  const double c22 = c(1, 1).real();
  const double c33 = c(2, 2).real();

  // Pc = 2 |Im <(S_hh - S_vv) S_hv^*>|, capped so the volume power stays
  // nonnegative.
  double p_helix = std::sqrt(2.0) * std::abs((c(0, 1) - c(2, 1)).imag());
  p_helix = std::min(p_helix, 2.0 * c22);

  // 10 log10(<|S_vv|^2> / <|S_hh|^2>) against +-2 dB.
  const double ratio_bound = std::pow(10.0, 0.2);
  VolumeModel model = kSymmetricVolume;
  double p_volume = 4.0 * c22 - 2.0 * p_helix;
  if (c33 * ratio_bound < c11) {
    model = kHorizontalVolume;
    p_volume = 3.75 * c22 - 1.875 * p_helix;
  } else if (c33 > c11 * ratio_bound) {
    model = kVerticalVolume;
    p_volume = 3.75 * c22 - 1.875 * p_helix;
  }
  p_volume = std::max(p_volume, 0.0);

  const auto split = split_surface_double(remove_volume_and_helix(c, model, p_volume, p_helix));
  const auto p = clamp_powers<4>({split.surface, split.dbl, p_volume, p_helix});
  return {p[0], p[1], p[2], p[3]};
}

FeatureVector22 pf22(const ScatteringMatrix& s, const HermitianMatrix3& c, const HermitianMatrix3& t) {
  constexpr std::array<std::pair<int, int>, 6> kUpper{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
  FeatureVector22 f{};
  std::size_t n = 0;
  for (const auto& [r, col] : kUpper) f[n++] = std::abs(t(r, col));
  for (const auto& [r, col] : kUpper) f[n++] = std::abs(c(r, col));

  // Scene vectorizations use S_hv only, so a non-reciprocal pixel is read the same way here.
  ScatteringMatrix mono = s;
  mono.vh = mono.hv;
  const auto pauli = pauli_decompose(mono);
  f[n++] = pauli.p_odd;
  f[n++] = pauli.p_even;
  f[n++] = pauli.p_volume;

  const auto fd = freeman_durden(c);
  f[n++] = fd.p_surface;
  f[n++] = fd.p_double;
  f[n++] = fd.p_volume;

  const auto y4 = yamaguchi4(c);
  f[n++] = y4.p_surface;
  f[n++] = y4.p_double;
  f[n++] = y4.p_volume;
  f[n++] = y4.p_helix;
  return f;
}

std::vector<double> pf22_scene(const PolsarScene& scene, int window) {
  const auto c = covariance_field(scene, window);
  const auto t = coherence_field(scene, window);
  std::vector<double> out;
  out.reserve(scene.size() * kPf22Size);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto f = pf22(scene.pixels[i], c.cells[i], t.cells[i]);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

FeatureScaling fit_feature_scaling(std::span<const double> values, int channels, std::span<const std::uint8_t> mask) {
  if (channels <= 0 || values.size() % static_cast<std::size_t>(channels) != 0) {
    fail(ErrorCode::ShapeError, "feature values are not a whole number of pixels");
  }
  const std::size_t d = static_cast<std::size_t>(channels);
  const std::size_t n = values.size() / d;
  if (!mask.empty() && mask.size() != n) fail(ErrorCode::ShapeError, "mask does not match the feature planes");
  FeatureScaling s;
  s.min.assign(d, std::numeric_limits<double>::infinity());
  s.max.assign(d, -std::numeric_limits<double>::infinity());
  std::size_t used = 0;
  for (std::size_t px = 0; px < n; ++px) {
    if (!mask.empty() && !mask[px]) continue;
    ++used;
    for (std::size_t c = 0; c < d; ++c) {
      s.min[c] = std::min(s.min[c], values[px * d + c]);
      s.max[c] = std::max(s.max[c], values[px * d + c]);
    }
  }
  if (used == 0) fail(ErrorCode::InvalidInput, "no pixels selected for feature scaling");
  return s;
}

void apply_feature_scaling(std::span<double> values, const FeatureScaling& scaling) {
  const std::size_t d = scaling.min.size();
  if (d == 0 || scaling.max.size() != d || values.size() % d != 0) {
    fail(ErrorCode::ShapeError, "feature scaling does not match the feature planes");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t c = i % d;
    const double range = scaling.max[c] - scaling.min[c];
    values[i] = range > 0.0 ? (values[i] - scaling.min[c]) / range : 0.0;
  }
}

}  // namespace pcn
