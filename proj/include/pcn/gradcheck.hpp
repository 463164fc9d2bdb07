#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pcn {

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Largest relative error between `analytic` and central differences of
/// `objective` with respect to each entry of `params` (perturbed in place
/// and restored).
double max_gradient_error(std::span<double> params, std::span<const double> analytic,
                          const std::function<double()>& objective, double epsilon = 1e-5);

struct GradcheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  double threshold = 0.0;

  bool passed() const { return max_relative_error <= threshold; }
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;

  bool passed() const;
};

/// Analytic-vs-finite-difference checks for conv (with and without ReLU),
/// pooling, unpooling, softmax + masked cross-entropy, and the full network
/// on a 4x4 toy scene.
GradcheckReport run_gradcheck(std::uint64_t seed = 7);

}  // namespace pcn
