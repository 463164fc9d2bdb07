#include "pcn/sampling.hpp"

#include <random>

#include "pcn/error.hpp"
#include "pcn/polsar.hpp"

namespace pcn {

SampleSelection select_training_samples(std::span<const std::uint8_t> labels, int num_classes, int per_class,
                                        std::uint64_t seed) {
  if (num_classes < 1 || num_classes > 255) fail(ErrorCode::InvalidInput, "num_classes must be in 1..255");
  if (per_class < 0) fail(ErrorCode::InvalidInput, "per_class must be nonnegative");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    if (labels[i] >= num_classes) {
      fail(ErrorCode::InvalidLabel, "label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) +
                                        " exceeds num_classes");
    }
    members[labels[i]].push_back(i);
  }

  SampleSelection out;
  out.mask.assign(labels.size(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& pool = members[c];
    const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(per_class));
    if (take < static_cast<std::size_t>(per_class)) {
      out.warnings.push_back("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                             " labelled pixels, fewer than " + std::to_string(per_class) + "; using all of them");
    }
    // Partial Fisher-Yates with an explicit draw so the result does not
    // depend on the standard library's shuffle.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t span_size = pool.size() - i;
      const std::size_t j = i + static_cast<std::size_t>(rng() % span_size);
      std::swap(pool[i], pool[j]);
      out.mask[pool[i]] = 1;
    }
    out.per_class_counts.push_back(take);
  }
  return out;
}

std::vector<std::uint8_t> test_labels(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask) {
  if (mask.size() != labels.size()) fail(ErrorCode::ShapeError, "mask and labels differ in size");
  std::vector<std::uint8_t> out(labels.begin(), labels.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask[i]) out[i] = kIgnoreLabel;
  return out;
}

}  // namespace pcn
