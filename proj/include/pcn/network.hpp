#pragma once

// The polarimetric convolutional network: a coded-input pathway (scattering
// coding -> two-layer front net -> FCN) and a raw 8-channel pathway (FCN),
// stacked channel-wise and reduced to class scores by a 1x1 convolution.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcn/coding.hpp"
#include "pcn/layers.hpp"
#include "pcn/polsar.hpp"
#include "pcn/tensor.hpp"

namespace pcn {

struct ConvSpec {
  int kernels = 1;
  int kernel_size = 1;
  int stride = 1;
  Padding padding;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

enum class Pathways { Dual, CodedOnly, RawOnly };
enum class LossReduction { Mean, Sum };

struct PcnConfig {
  int num_classes = 2;
  /// Output channels of each pathway (M); the fusion layer sees 2M.
  int feature_maps = 32;
  /// Front net on the 4s1 x 4s2 coded matrix. The default halves the
  /// resolution twice so its output is s1 x s2.
  std::array<ConvSpec, 2> front_net{{{32, 4, 2, {1, 1}}, {64, 4, 2, {1, 1}}}};
  /// Encoder widths of each FCN pathway.
  std::array<int, 5> fcn_widths{16, 32, 64, 64, 32};
  int fcn_kernel = 5;
  int pool_window = 2;
  Pathways pathways = Pathways::Dual;

  int max_epochs = 300;
  int plateau_window = 20;
  double plateau_tolerance = 1e-4;
  std::uint64_t seed = 1;
  double learning_rate = 0.01;
  double momentum = 0.9;
  /// Per-epoch multiplicative learning-rate decay; 0 disables it.
  double lr_decay = 0.0;
  LossReduction loss_reduction = LossReduction::Mean;

  /// Training pixels drawn per class by the command line tool.
  int per_class = 1000;
  /// Averaging window for covariance/coherence derived features.
  int window = 3;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;

  static PcnConfig desk_preset();
  /// FCN widths 64/128/256/256/128.
  static PcnConfig paper_width_preset();
  /// Front net strides 1 then 2. Its output is 2s1 x 2s2, so a full model
  /// cannot be assembled from it; front_net_forward still runs.
  static PcnConfig paper_front_preset();
};

/// Per-channel min/max scaling of the raw channels onto [-1, 1] and the scale of the
/// coded matrix, fitted on the training scene.
struct InputNormalization {
  std::array<double, 8> raw_min{};
  std::array<double, 8> raw_max{};
  double coded_scale = 1.0;

  friend bool operator==(const InputNormalization&, const InputNormalization&) = default;
};

InputNormalization fit_normalization(const PolsarScene& scene);

/// Encoder/decoder pathway with index unpooling and additive skips:
///   e1 -> pool -> e2 -> pool -> e3 -> e4 -> e5
///   d6 (+pool2 skip) -> unpool -> d7 (+pool1 skip) -> unpool -> d8 (+e1 skip) -> d9
struct FcnPathway {
  std::array<ConvLayer, 9> layers;
  int pool_window = 2;
};

struct PcnModel {
  PcnConfig config;
  std::array<ConvLayer, 2> front;
  FcnPathway coded;
  FcnPathway raw;
  ConvLayer fusion;
  InputNormalization normalization;

  bool has_coded() const { return config.pathways != Pathways::RawOnly; }
  bool has_raw() const { return config.pathways != Pathways::CodedOnly; }
};

/// A named view of one trainable layer.
struct LayerRef {
  std::string name;
  ConvLayer* layer = nullptr;
};

/// Active layers in a fixed order: front.0-1, coded.e1..d9, raw.e1..d9,
/// fusion. Pathways absent from the model are skipped.
std::vector<LayerRef> trainable_layers(PcnModel& model);
std::vector<std::pair<std::string, const ConvLayer*>> trainable_layers(const PcnModel& model);

/// Builds the architecture for `config` with Xavier weights drawn from
/// config.seed and zero biases. Normalization stays at identity until fitted.
PcnModel build_model(const PcnConfig& config);

/// Same contract as build_model with one pathway removed; the fusion layer
/// sees M channels instead of 2M.
PcnModel build_ablation_single_pathway(PcnConfig config, Pathways which);

/// Eight planes per pixel: Re/Im of HH, HV, VH, VV, unscaled.
Tensor3 raw_channels(const PolsarScene& scene);
/// Same planes mapped onto [-1, 1] with the model's constants; a constant
/// channel maps to -1.
Tensor3 raw_channels(const PolsarScene& scene, const InputNormalization& norm);

/// Coded matrix as a single-channel tensor divided by norm.coded_scale.
Tensor3 coded_input(const CodedMatrix& coded, const InputNormalization& norm);

/// Two-layer front net with ReLU on the scaled coded matrix.
Tensor3 front_net_forward(const CodedMatrix& coded, const PcnModel& model);

/// Network inputs derived once per scene.
struct PcnInputs {
  Tensor3 coded;  // 4h x 4w x 1, scaled
  Tensor3 raw;    // h x w x 8, scaled
  int height = 0;
  int width = 0;
};

PcnInputs prepare_inputs(const PolsarScene& scene, const PcnModel& model);

/// Class scores before the softmax.
Tensor3 pcn_logits(const PcnInputs& inputs, const PcnModel& model);

/// Per-pixel class probabilities, h x w x C.
Tensor3 pcn_forward(const PolsarScene& scene, const PcnModel& model);

/// Per-pixel argmax; ties go to the lower class id.
std::vector<std::uint8_t> argmax_map(const Tensor3& probabilities);
std::vector<std::uint8_t> predict_map(const PolsarScene& scene, const PcnModel& model);

/// Gradients of every trainable layer, in trainable_layers order.
struct PcnGradients {
  std::vector<ConvGrads> layers;
};

struct LossAndGradients {
  double loss = 0.0;
  std::size_t counted = 0;
  Tensor3 probabilities;
  PcnGradients gradients;
};

/// One forward/backward pass of the masked cross-entropy (reduced as the
/// config says) over the label grid.
LossAndGradients loss_and_gradients(const PcnInputs& inputs, const PcnModel& model,
                                    std::span<const std::uint8_t> labels);

}  // namespace pcn
