#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pcn/network.hpp"

namespace pcn {

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainResult {
  PcnModel model;
  std::vector<EpochRecord> log;
  bool stopped_on_plateau = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Applies the training mask: labels where mask is nonzero, kIgnoreLabel
/// elsewhere. An empty mask keeps every label.
std::vector<std::uint8_t> training_labels(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask);

/// Trains `model` in place on one full scene per step (batch size 1).
/// Only pixels with a non-ignore entry in `train_labels` enter the loss.
/// Stops after max_epochs or when the loss improves by less than
/// plateau_tolerance (relative) over plateau_window epochs.
TrainResult train_model(PcnModel model, const PolsarScene& scene, std::span<const std::uint8_t> train_labels,
                        const EpochCallback& on_epoch = {});

/// Builds the model described by `config`, fits input normalization on
/// `scene` and trains it. `labels` is the full truth map; `mask` selects
/// the training pixels (empty = all labelled pixels). Throws InvalidLabel
/// when a class has no training pixel.
TrainResult train(const PolsarScene& scene, std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask,
                  const PcnConfig& config, const EpochCallback& on_epoch = {});

}  // namespace pcn
