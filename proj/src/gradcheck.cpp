#include "pcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcn/layers.hpp"
#include "pcn/network.hpp"

namespace pcn {

namespace {

constexpr double kLayerThreshold = 1e-4;
constexpr double kNetworkThreshold = 1e-3;

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine() >> 11) * 0x1.0p-53;
  }
  void fill(std::span<double> v, double lo = -1.0, double hi = 1.0) {
    for (double& x : v) x = uniform(lo, hi);
  }
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GradcheckEntry check_conv(Rng& rng, Activation activation, const char* name) {
  double worst = 0.0;
  // Same-padded stride 1 and strided 4x4 with asymmetric padding.
  struct Case {
    int h, w, d, kernels, k, stride;
    Padding pad;
  };
  for (const Case& cs : {Case{6, 6, 3, 4, 3, 1, {1, 1}}, Case{8, 8, 2, 3, 4, 2, {1, 1}}, Case{5, 7, 2, 2, 4, 1, {1, 2}}}) {
    Tensor3 x(cs.h, cs.w, cs.d);
    rng.fill(x.data);
    ConvLayer layer(cs.kernels, cs.d, cs.k, cs.stride, cs.pad);
    rng.fill(layer.weights, -0.5, 0.5);
    rng.fill(layer.bias, -0.1, 0.1);
    const Tensor3 out = conv_forward(x, layer, activation);
    Tensor3 probe(out.h, out.w, out.d);
    rng.fill(probe.data);

    auto objective = [&] { return dot(conv_forward(x, layer, activation).data, probe.data); };
    const auto grads = conv_backward(probe, x, out, layer, activation);
    worst = std::max(worst, max_gradient_error(x.data, grads.grad_x.data, objective));
    worst = std::max(worst, max_gradient_error(layer.weights, grads.grad_w, objective));
    worst = std::max(worst, max_gradient_error(layer.bias, grads.grad_b, objective));
  }
  return {name, worst, kLayerThreshold};
}

GradcheckEntry check_pooling(Rng& rng) {
  double worst = 0.0;
  for (auto [h, w] : {std::pair{6, 6}, std::pair{5, 7}}) {
    Tensor3 x(h, w, 3);
    rng.fill(x.data);
    const auto pooled = maxpool_forward(x, 2);
    Tensor3 probe(pooled.out.h, pooled.out.w, pooled.out.d);
    rng.fill(probe.data);
    auto objective = [&] { return dot(maxpool_forward(x, 2).out.data, probe.data); };
    worst = std::max(worst, max_gradient_error(x.data, maxpool_backward(probe, pooled.record).data, objective));
  }
  return {"maxpool", worst, kLayerThreshold};
}

GradcheckEntry check_unpooling(Rng& rng) {
  Tensor3 x(6, 5, 2);
  rng.fill(x.data);
  const auto pooled = maxpool_forward(x, 2);
  Tensor3 y = pooled.out;
  rng.fill(y.data);
  Tensor3 probe(x.h, x.w, x.d);
  rng.fill(probe.data);
  auto objective = [&] { return dot(unpool(y, pooled.record).data, probe.data); };
  const double worst = max_gradient_error(y.data, unpool_backward(probe, pooled.record).data, objective);
  return {"unpool", worst, kLayerThreshold};
}

GradcheckEntry check_softmax_cross_entropy(Rng& rng) {
  Tensor3 a(4, 5, 4);
  rng.fill(a.data, -3.0, 3.0);
  std::vector<std::uint8_t> labels(a.pixels());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = i % 5 == 0 ? kIgnoreLabel : static_cast<std::uint8_t>(rng.engine() % 4);
  }
  auto objective = [&] { return cross_entropy_masked(softmax_pixelwise(a), labels).loss; };
  const auto analytic = cross_entropy_masked(softmax_pixelwise(a), labels).grad;
  return {"softmax_cross_entropy", max_gradient_error(a.data, analytic.data, objective), kLayerThreshold};
}

GradcheckEntry check_network(Rng& rng, std::uint64_t seed) {
  PcnConfig config;
  config.num_classes = 3;
  config.feature_maps = 3;
  config.front_net = {{{3, 4, 2, {1, 1}}, {4, 4, 2, {1, 1}}}};
  config.fcn_widths = {3, 4, 4, 4, 3};
  config.fcn_kernel = 3;
  config.seed = seed;
  PcnModel model = build_model(config);

  PolsarScene scene;
  scene.height = 4;
  scene.width = 4;
  for (int i = 0; i < 16; ++i) {
    auto z = [&] { return Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)); };
    const Complex hv = z();
    scene.pixels.push_back({z(), hv, hv, z()});
  }
  model.normalization = fit_normalization(scene);
  for (auto& ref : trainable_layers(model)) rng.fill(ref.layer->bias, 0.0, 0.2);

  std::vector<std::uint8_t> labels(16);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 7 == 3 ? kIgnoreLabel : static_cast<std::uint8_t>(i % 3);

  const PcnInputs inputs = prepare_inputs(scene, model);
  const auto analytic = loss_and_gradients(inputs, model, labels);
  auto objective = [&] { return loss_and_gradients(inputs, model, labels).loss; };

  double worst = 0.0;
  auto layers = trainable_layers(model);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    worst = std::max(worst, max_gradient_error(layers[i].layer->weights, analytic.gradients.layers[i].grad_w, objective));
    worst = std::max(worst, max_gradient_error(layers[i].layer->bias, analytic.gradients.layers[i].grad_b, objective));
  }
  return {"network_4x4", worst, kNetworkThreshold};
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double max_gradient_error(std::span<double> params, std::span<const double> analytic,
                          const std::function<double()>& objective, double epsilon) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = objective();
    params[i] = saved - epsilon;
    const double down = objective();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

bool GradcheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed(); });
}

GradcheckReport run_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckReport report;
  report.entries.push_back(check_conv(rng, Activation::None, "conv"));
  report.entries.push_back(check_conv(rng, Activation::ReLU, "conv_relu"));
  report.entries.push_back(check_pooling(rng));
  report.entries.push_back(check_unpooling(rng));
  report.entries.push_back(check_softmax_cross_entropy(rng));
  report.entries.push_back(check_network(rng, seed));
  return report;
}

}  // namespace pcn
