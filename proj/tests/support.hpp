#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "pcn/polsar.hpp"
#include "pcn/tensor.hpp"

namespace testing {

inline pcn::Complex random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

inline pcn::ScatteringMatrix random_matrix(std::mt19937_64& rng, bool reciprocal = true) {
  pcn::ScatteringMatrix s{random_complex(rng), random_complex(rng), random_complex(rng), random_complex(rng)};
  if (reciprocal) s.vh = s.hv;
  return s;
}

inline pcn::PolsarScene random_scene(std::mt19937_64& rng, int h, int w) {
  pcn::PolsarScene scene;
  scene.height = h;
  scene.width = w;
  for (int i = 0; i < h * w; ++i) scene.pixels.push_back(random_matrix(rng));
  return scene;
}

inline pcn::Tensor3 random_tensor(std::mt19937_64& rng, int h, int w, int d, double scale = 1.0) {
  pcn::Tensor3 t(h, w, d);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : t.data) v = u(rng);
  return t;
}

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

inline bool same_bits(pcn::Complex a, pcn::Complex b) {
  return same_bits(a.real(), b.real()) && same_bits(a.imag(), b.imag());
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pcn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
