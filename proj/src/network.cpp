#include "pcn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcn/error.hpp"

namespace pcn {

namespace {

constexpr std::array<const char*, 9> kPathwayLayerNames{"e1", "e2", "e3", "e4", "e5", "d6", "d7", "d8", "d9"};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ConvLayer make_conv(const ConvSpec& spec, int in_depth) {
  return ConvLayer(spec.kernels, in_depth, spec.kernel_size, spec.stride, spec.padding);
}

FcnPathway make_pathway(const PcnConfig& config, int in_depth) {
  const auto& w = config.fcn_widths;
  const int k = config.fcn_kernel;
  const Padding pad = same_padding(k);
  FcnPathway p;
  p.pool_window = config.pool_window;
  p.layers = {ConvLayer(w[0], in_depth, k, 1, pad), ConvLayer(w[1], w[0], k, 1, pad), ConvLayer(w[2], w[1], k, 1, pad),
              ConvLayer(w[3], w[2], k, 1, pad),     ConvLayer(w[4], w[3], k, 1, pad), ConvLayer(w[1], w[4], k, 1, pad),
              ConvLayer(w[0], w[1], k, 1, pad),     ConvLayer(w[0], w[0], k, 1, pad),
              ConvLayer(config.feature_maps, w[0], k, 1, pad)};
  return p;
}

void check_front_shape_contract(const PcnConfig& config) {
  const ConvLayer first = make_conv(config.front_net[0], 1);
  const ConvLayer second = make_conv(config.front_net[1], config.front_net[0].kernels);
  for (int n : {1, 2, 3, 5, 8}) {
    int out = -1;
    try {
      out = second.output_extent(first.output_extent(4 * n));
    } catch (const Error&) {
      out = -1;
    }
    if (out != n) {
      fail(ErrorCode::ShapeError, "front net maps a " + std::to_string(4 * n) + "-pixel coded extent to " +
                                      (out < 0 ? std::string("an invalid extent") : std::to_string(out)) +
                                      ", but the coded pathway needs " + std::to_string(n));
    }
  }
}

struct PathwayCache {
  Tensor3 x;
  std::array<Tensor3, 9> act;
  PoolResult pool1;
  PoolResult pool2;
  Tensor3 s6, u7, s7, u8, s8;
};

PathwayCache pathway_forward(const FcnPathway& p, Tensor3 x) {
  PathwayCache c;
  c.x = std::move(x);
  const auto& L = p.layers;
  const auto relu = Activation::ReLU;
  c.act[0] = conv_forward(c.x, L[0], relu);
  c.pool1 = maxpool_forward(c.act[0], p.pool_window);
  c.act[1] = conv_forward(c.pool1.out, L[1], relu);
  c.pool2 = maxpool_forward(c.act[1], p.pool_window);
  c.act[2] = conv_forward(c.pool2.out, L[2], relu);
  c.act[3] = conv_forward(c.act[2], L[3], relu);
  c.act[4] = conv_forward(c.act[3], L[4], relu);

  c.act[5] = conv_forward(c.act[4], L[5], relu);
  c.s6 = c.act[5];
  c.s6 += c.pool2.out;
  c.u7 = unpool(c.s6, c.pool2.record);
  c.act[6] = conv_forward(c.u7, L[6], relu);
  c.s7 = c.act[6];
  c.s7 += c.pool1.out;
  c.u8 = unpool(c.s7, c.pool1.record);
  c.act[7] = conv_forward(c.u8, L[7], relu);
  c.s8 = c.act[7];
  c.s8 += c.act[0];
  c.act[8] = conv_forward(c.s8, L[8], Activation::None);
  return c;
}

// Writes the nine layer gradients into grads[0..8]; returns the input
// gradient when requested.
Tensor3 pathway_backward(const FcnPathway& p, const PathwayCache& c, const Tensor3& grad_out,
                         std::span<ConvGrads> grads, bool need_grad_x) {
  const auto& L = p.layers;
  const auto relu = Activation::ReLU;

  grads[8] = conv_backward(grad_out, c.s8, c.act[8], L[8], Activation::None);
  Tensor3 g_a1 = grads[8].grad_x;  // skip into e1 output
  grads[7] = conv_backward(grads[8].grad_x, c.u8, c.act[7], L[7], relu);
  const Tensor3 g_s7 = unpool_backward(grads[7].grad_x, c.pool1.record);
  Tensor3 g_p1 = g_s7;  // skip into pool1 output
  grads[6] = conv_backward(g_s7, c.u7, c.act[6], L[6], relu);
  const Tensor3 g_s6 = unpool_backward(grads[6].grad_x, c.pool2.record);
  Tensor3 g_p2 = g_s6;  // skip into pool2 output
  grads[5] = conv_backward(g_s6, c.act[4], c.act[5], L[5], relu);

  grads[4] = conv_backward(grads[5].grad_x, c.act[3], c.act[4], L[4], relu);
  grads[3] = conv_backward(grads[4].grad_x, c.act[2], c.act[3], L[3], relu);
  grads[2] = conv_backward(grads[3].grad_x, c.pool2.out, c.act[2], L[2], relu);
  g_p2 += grads[2].grad_x;
  const Tensor3 g_a2 = maxpool_backward(g_p2, c.pool2.record);
  grads[1] = conv_backward(g_a2, c.pool1.out, c.act[1], L[1], relu);
  g_p1 += grads[1].grad_x;
  g_a1 += maxpool_backward(g_p1, c.pool1.record);
  grads[0] = conv_backward(g_a1, c.x, c.act[0], L[0], relu, need_grad_x);

  // Intermediate input gradients are not part of the returned layer grads.
  for (std::size_t i = 1; i < 9; ++i) grads[i].grad_x = Tensor3();
  Tensor3 gx = std::move(grads[0].grad_x);
  grads[0].grad_x = Tensor3();
  return gx;
}

struct NetworkCache {
  Tensor3 front_out0;
  Tensor3 front_out1;
  PathwayCache coded;
  PathwayCache raw;
  Tensor3 stacked;
  Tensor3 logits;
};

NetworkCache network_forward(const PcnInputs& inputs, const PcnModel& model) {
  NetworkCache n;
  Tensor3 coded_out;
  Tensor3 raw_out;
  if (model.has_coded()) {
    n.front_out0 = conv_forward(inputs.coded, model.front[0], Activation::ReLU);
    n.front_out1 = conv_forward(n.front_out0, model.front[1], Activation::ReLU);
    n.coded = pathway_forward(model.coded, n.front_out1);
    coded_out = n.coded.act[8];
  }
  if (model.has_raw()) {
    n.raw = pathway_forward(model.raw, inputs.raw);
    raw_out = n.raw.act[8];
  }
  if (model.has_coded() && model.has_raw()) {
    n.stacked = concat_channels(coded_out, raw_out);
  } else {
    n.stacked = model.has_coded() ? std::move(coded_out) : std::move(raw_out);
  }
  if (n.stacked.h != inputs.height || n.stacked.w != inputs.width) {
    fail(ErrorCode::ShapeError, "pathway output " + n.stacked.shape_string() + " does not match scene " +
                                    std::to_string(inputs.height) + "x" + std::to_string(inputs.width));
  }
  n.logits = conv_forward(n.stacked, model.fusion, Activation::None);
  return n;
}

double scale_of(const std::array<double, 8>& lo, const std::array<double, 8>& hi, std::size_t c) {
  const double range = hi[c] - lo[c];
  return range > 0.0 ? 1.0 / range : 0.0;
}

}  // namespace

void PcnConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
  };
  require(num_classes >= 2 && num_classes < 255, "num_classes must be in [2, 254]");
  require(feature_maps >= 1, "feature_maps must be >= 1");
  for (const auto& f : front_net) {
    require(f.kernels >= 1 && f.kernel_size >= 1 && f.stride >= 1, "front net layers need positive sizes");
    require(f.padding.before >= 0 && f.padding.after >= 0, "front net padding must be >= 0");
  }
  for (int w : fcn_widths) require(w >= 1, "fcn widths must be >= 1");
  require(fcn_kernel >= 1 && fcn_kernel % 2 == 1, "fcn_kernel must be odd and >= 1");
  require(pool_window >= 1, "pool_window must be >= 1");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(plateau_window >= 1, "plateau_window must be >= 1");
  require(plateau_tolerance >= 0.0, "plateau_tolerance must be >= 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(lr_decay >= 0.0 && lr_decay < 1.0, "lr_decay must be in [0, 1)");
  require(per_class >= 1, "per_class must be >= 1");
  require(window >= 1 && window % 2 == 1, "window must be odd and >= 1");
}

PcnConfig PcnConfig::desk_preset() { return PcnConfig{}; }

PcnConfig PcnConfig::paper_width_preset() {
  PcnConfig c;
  c.fcn_widths = {64, 128, 256, 256, 128};
  return c;
}

PcnConfig PcnConfig::paper_front_preset() {
  PcnConfig c;
  c.front_net = {{{32, 4, 1, same_padding(4)}, {64, 4, 2, {1, 1}}}};
  return c;
}

InputNormalization fit_normalization(const PolsarScene& scene) {
  scene.validate();
  const Tensor3 raw = raw_channels(scene);
  InputNormalization n;
  n.raw_min.fill(std::numeric_limits<double>::infinity());
  n.raw_max.fill(-std::numeric_limits<double>::infinity());
  double peak = 0.0;
  for (std::size_t px = 0; px < raw.pixels(); ++px) {
    for (std::size_t c = 0; c < 8; ++c) {
      const double v = raw.data[px * 8 + c];
      n.raw_min[c] = std::min(n.raw_min[c], v);
      n.raw_max[c] = std::max(n.raw_max[c], v);
      peak = std::max(peak, std::abs(v));
    }
  }
  n.coded_scale = peak > 0.0 ? peak : 1.0;
  return n;
}

std::vector<LayerRef> trainable_layers(PcnModel& model) {
  std::vector<LayerRef> out;
  if (model.has_coded()) {
    out.push_back({"front.0", &model.front[0]});
    out.push_back({"front.1", &model.front[1]});
    for (std::size_t i = 0; i < 9; ++i) out.push_back({std::string("coded.") + kPathwayLayerNames[i], &model.coded.layers[i]});
  }
  if (model.has_raw()) {
    for (std::size_t i = 0; i < 9; ++i) out.push_back({std::string("raw.") + kPathwayLayerNames[i], &model.raw.layers[i]});
  }
  out.push_back({"fusion", &model.fusion});
  return out;
}

std::vector<std::pair<std::string, const ConvLayer*>> trainable_layers(const PcnModel& model) {
  std::vector<std::pair<std::string, const ConvLayer*>> out;
  for (auto& ref : trainable_layers(const_cast<PcnModel&>(model))) out.emplace_back(ref.name, ref.layer);
  return out;
}

PcnModel build_model(const PcnConfig& config) {
  config.validate();
  PcnModel model;
  model.config = config;
  if (model.has_coded()) {
    check_front_shape_contract(config);
    model.front[0] = make_conv(config.front_net[0], 1);
    model.front[1] = make_conv(config.front_net[1], config.front_net[0].kernels);
    model.coded = make_pathway(config, config.front_net[1].kernels);
  }
  if (model.has_raw()) model.raw = make_pathway(config, 8);
  const int fused = config.feature_maps * (config.pathways == Pathways::Dual ? 2 : 1);
  model.fusion = ConvLayer(config.num_classes, fused, 1, 1, {});

  std::uint64_t stream = 0;
  for (auto& ref : trainable_layers(model)) {
    auto& layer = *ref.layer;
    const int area = layer.kernel_size * layer.kernel_size;
    layer.weights = xavier_init(layer.weight_count(), layer.in_depth * area, layer.kernel_count * area,
                                mix_seed(config.seed, stream++));
  }
  return model;
}

PcnModel build_ablation_single_pathway(PcnConfig config, Pathways which) {
  if (which == Pathways::Dual) fail(ErrorCode::ConfigError, "an ablation keeps exactly one pathway");
  config.pathways = which;
  return build_model(config);
}

Tensor3 raw_channels(const PolsarScene& scene) {
  scene.validate();
  Tensor3 t(scene.height, scene.width, 8);
  for (std::size_t px = 0; px < scene.size(); ++px) {
    const auto& s = scene.pixels[px];
    double* dst = t.data.data() + px * 8;
    dst[0] = s.hh.real();
    dst[1] = s.hh.imag();
    dst[2] = s.hv.real();
    dst[3] = s.hv.imag();
    dst[4] = s.vh.real();
    dst[5] = s.vh.imag();
    dst[6] = s.vv.real();
    dst[7] = s.vv.imag();
  }
  return t;
}

Tensor3 raw_channels(const PolsarScene& scene, const InputNormalization& norm) {
  Tensor3 t = raw_channels(scene);
  for (std::size_t px = 0; px < t.pixels(); ++px) {
    for (std::size_t c = 0; c < 8; ++c) {
      double& v = t.data[px * 8 + c];
      v = 2.0 * (v - norm.raw_min[c]) * scale_of(norm.raw_min, norm.raw_max, c) - 1.0;
    }
  }
  return t;
}

Tensor3 coded_input(const CodedMatrix& coded, const InputNormalization& norm) {
  Tensor3 t(coded.rows, coded.cols, 1);
  const double inv = 1.0 / norm.coded_scale;
  for (std::size_t i = 0; i < coded.values.size(); ++i) t.data[i] = coded.values[i] * inv;
  return t;
}

Tensor3 front_net_forward(const CodedMatrix& coded, const PcnModel& model) {
  const Tensor3 x = coded_input(coded, model.normalization);
  const Tensor3 f0 = conv_forward(x, model.front[0], Activation::ReLU);
  return conv_forward(f0, model.front[1], Activation::ReLU);
}

PcnInputs prepare_inputs(const PolsarScene& scene, const PcnModel& model) {
  scene.validate();
  PcnInputs in;
  in.height = scene.height;
  in.width = scene.width;
  if (model.has_coded()) in.coded = coded_input(encode_scene(scene), model.normalization);
  if (model.has_raw()) in.raw = raw_channels(scene, model.normalization);
  return in;
}

Tensor3 pcn_logits(const PcnInputs& inputs, const PcnModel& model) {
  return network_forward(inputs, model).logits;
}

Tensor3 pcn_forward(const PolsarScene& scene, const PcnModel& model) {
  return softmax_pixelwise(pcn_logits(prepare_inputs(scene, model), model));
}

std::vector<std::uint8_t> argmax_map(const Tensor3& probabilities) {
  std::vector<std::uint8_t> out(probabilities.pixels());
  const std::size_t d = static_cast<std::size_t>(probabilities.d);
  for (std::size_t px = 0; px < out.size(); ++px) {
    const double* p = probabilities.data.data() + px * d;
    std::size_t best = 0;
    for (std::size_t c = 1; c < d; ++c)
      if (p[c] > p[best]) best = c;
    out[px] = static_cast<std::uint8_t>(best);
  }
  return out;
}

std::vector<std::uint8_t> predict_map(const PolsarScene& scene, const PcnModel& model) {
  return argmax_map(pcn_forward(scene, model));
}

LossAndGradients loss_and_gradients(const PcnInputs& inputs, const PcnModel& model,
                                    std::span<const std::uint8_t> labels) {
  NetworkCache n = network_forward(inputs, model);
  LossAndGradients out;
  out.probabilities = softmax_pixelwise(n.logits);
  LossResult ce = cross_entropy_masked(out.probabilities, labels);
  out.counted = ce.counted;
  out.loss = ce.loss;
  if (model.config.loss_reduction == LossReduction::Mean && ce.counted > 0) {
    const double inv = 1.0 / static_cast<double>(ce.counted);
    out.loss *= inv;
    for (double& g : ce.grad.data) g *= inv;
  }

  const bool dual = model.has_coded() && model.has_raw();
  auto& grads = out.gradients.layers;
  grads.resize(trainable_layers(model).size());

  ConvGrads fusion = conv_backward(ce.grad, n.stacked, n.logits, model.fusion, Activation::None);
  Tensor3 g_coded;
  Tensor3 g_raw;
  if (dual) {
    std::tie(g_coded, g_raw) = split_channels(fusion.grad_x, model.config.feature_maps);
  } else if (model.has_coded()) {
    g_coded = std::move(fusion.grad_x);
  } else {
    g_raw = std::move(fusion.grad_x);
  }
  fusion.grad_x = Tensor3();
  grads.back() = std::move(fusion);

  std::size_t offset = 0;
  if (model.has_coded()) {
    const Tensor3 g_front =
        pathway_backward(model.coded, n.coded, g_coded, std::span<ConvGrads>(grads).subspan(2, 9), true);
    grads[1] = conv_backward(g_front, n.front_out0, n.front_out1, model.front[1], Activation::ReLU);
    grads[0] = conv_backward(grads[1].grad_x, inputs.coded, n.front_out0, model.front[0], Activation::ReLU, false);
    grads[1].grad_x = Tensor3();
    offset = 11;
  }
  if (model.has_raw()) {
    pathway_backward(model.raw, n.raw, g_raw, std::span<ConvGrads>(grads).subspan(offset, 9), false);
  }
  return out;
}

}  // namespace pcn
