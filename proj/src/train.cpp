#include "pcn/train.hpp"

#include <cmath>
#include <string>

#include "pcn/error.hpp"

namespace pcn {

namespace {

void check_class_coverage(std::span<const std::uint8_t> train_labels, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto l : train_labels) {
    if (l == kIgnoreLabel) continue;
    if (l >= num_classes) {
      fail(ErrorCode::InvalidLabel, "label " + std::to_string(l) + " >= class count " + std::to_string(num_classes));
    }
    ++counts[l];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) fail(ErrorCode::InvalidLabel, "class " + std::to_string(c) + " has no training pixels");
  }
}

double train_accuracy(const Tensor3& probabilities, std::span<const std::uint8_t> labels) {
  const auto predicted = argmax_map(probabilities);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    ++total;
    if (predicted[i] == labels[i]) ++hits;
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

bool on_plateau(const std::vector<EpochRecord>& log, const PcnConfig& config) {
  const auto window = static_cast<std::size_t>(config.plateau_window);
  if (log.size() <= window) return false;
  const double before = log[log.size() - 1 - window].loss;
  const double now = log.back().loss;
  if (before <= 0.0) return true;
  return (before - now) / before < config.plateau_tolerance;
}

}  // namespace

std::vector<std::uint8_t> training_labels(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask) {
  if (!mask.empty() && mask.size() != labels.size()) {
    fail(ErrorCode::ShapeError, "training mask has " + std::to_string(mask.size()) + " cells, labels " +
                                    std::to_string(labels.size()));
  }
  std::vector<std::uint8_t> out(labels.begin(), labels.end());
  if (!mask.empty()) {
    for (std::size_t i = 0; i < out.size(); ++i)
      if (mask[i] == 0) out[i] = kIgnoreLabel;
  }
  return out;
}

TrainResult train_model(PcnModel model, const PolsarScene& scene, std::span<const std::uint8_t> train_labels,
                        const EpochCallback& on_epoch) {
  const auto& config = model.config;
  if (train_labels.size() != scene.size()) fail(ErrorCode::ShapeError, "label grid does not match scene");
  check_class_coverage(train_labels, config.num_classes);

  const PcnInputs inputs = prepare_inputs(scene, model);
  OptimizerState state;
  state.learning_rate = config.learning_rate;
  state.momentum = config.momentum;

  TrainResult result;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto step = loss_and_gradients(inputs, model, train_labels);
    if (!std::isfinite(step.loss)) {
      fail(ErrorCode::InvalidInput, "training diverged at epoch " + std::to_string(epoch));
    }
    EpochRecord record{epoch, step.loss, train_accuracy(step.probabilities, train_labels)};
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);

    auto layers = trainable_layers(model);
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      params.emplace_back(layers[i].layer->weights);
      grads.emplace_back(step.gradients.layers[i].grad_w);
      params.emplace_back(layers[i].layer->bias);
      grads.emplace_back(step.gradients.layers[i].grad_b);
    }
    sgd_momentum_step(params, grads, state);
    if (config.lr_decay > 0.0) state.learning_rate *= 1.0 - config.lr_decay;

    if (on_plateau(result.log, config)) {
      result.stopped_on_plateau = true;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(const PolsarScene& scene, std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask,
                  const PcnConfig& config, const EpochCallback& on_epoch) {
  scene.validate();
  const auto masked = training_labels(labels, mask);
  check_class_coverage(masked, config.num_classes);
  PcnModel model = build_model(config);
  model.normalization = fit_normalization(scene);
  return train_model(std::move(model), scene, masked, on_epoch);
}

}  // namespace pcn
