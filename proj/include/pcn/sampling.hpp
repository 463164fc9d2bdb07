#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pcn {

struct SampleSelection {
  /// 1 for training pixels, 0 elsewhere.
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> per_class_counts;
  std::vector<std::string> warnings;
};

/// Draws min(per_class, available) labelled pixels of every class without
/// replacement. Ignored pixels are never selected; the test set is every
/// labelled pixel outside the mask.
SampleSelection select_training_samples(std::span<const std::uint8_t> labels, int num_classes, int per_class,
                                        std::uint64_t seed);

/// Labels outside the training mask (kIgnoreLabel inside it).
std::vector<std::uint8_t> test_labels(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask);

}  // namespace pcn
