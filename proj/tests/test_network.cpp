#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pcn/coding.hpp"
#include "pcn/error.hpp"
#include "pcn/gradcheck.hpp"
#include "pcn/network.hpp"
#include "support.hpp"

using namespace pcn;
using testing::random_scene;

namespace {

PcnConfig small_config(int classes = 3) {
  PcnConfig c;
  c.num_classes = classes;
  c.feature_maps = 4;
  c.front_net = {{{4, 4, 2, {1, 1}}, {6, 4, 2, {1, 1}}}};
  c.fcn_widths = {4, 5, 6, 6, 5};
  c.fcn_kernel = 3;
  return c;
}

PcnModel fitted_model(const PolsarScene& scene, const PcnConfig& config) {
  PcnModel m = build_model(config);
  m.normalization = fit_normalization(scene);
  return m;
}

void randomize_biases(PcnModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& ref : trainable_layers(model))
    for (double& b : ref.layer->bias) b = u(rng);
}

}  // namespace

TEST_CASE("raw channels carry real and imaginary parts in HH HV VH VV order") {
  PolsarScene scene;
  scene.height = 1;
  scene.width = 1;
  scene.pixels = {{{1, 0}, {0, 0}, {0, 0}, {1, 0}}};
  const Tensor3 raw = raw_channels(scene);
  CHECK(raw.d == 8);
  CHECK(raw.data == std::vector<double>{1, 0, 0, 0, 0, 0, 1, 0});

  scene.pixels = {{{1, 2}, {3, 4}, {5, 6}, {7, 8}}};
  CHECK(raw_channels(scene).data == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("raw channels reconstruct the scene exactly") {
  std::mt19937_64 rng(3);
  const PolsarScene scene = random_scene(rng, 5, 7);
  const Tensor3 raw = raw_channels(scene);
  for (std::size_t px = 0; px < scene.size(); ++px) {
    const double* v = raw.data.data() + px * 8;
    const ScatteringMatrix back{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}};
    CHECK(back == scene.pixels[px]);
  }
}

TEST_CASE("empty scene is rejected") {
  PolsarScene scene;
  CHECK_THROWS_AS(raw_channels(scene), Error);
  try {
    raw_channels(scene);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}

TEST_CASE("fitted normalization maps raw channels onto [-1, 1]") {
  std::mt19937_64 rng(4);
  const PolsarScene scene = random_scene(rng, 6, 6);
  const InputNormalization norm = fit_normalization(scene);
  const Tensor3 scaled = raw_channels(scene, norm);
  for (int c = 0; c < 8; ++c) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t px = 0; px < scaled.pixels(); ++px) {
      lo = std::min(lo, scaled.data[px * 8 + static_cast<std::size_t>(c)]);
      hi = std::max(hi, scaled.data[px * 8 + static_cast<std::size_t>(c)]);
    }
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
  }
  double peak = 0.0;
  for (const auto& s : scene.pixels)
    for (const Complex& z : {s.hh, s.hv, s.vh, s.vv}) peak = std::max({peak, std::abs(z.real()), std::abs(z.imag())});
  CHECK(norm.coded_scale == peak);
}

TEST_CASE("front net maps a 4h x 4w coded matrix to h x w") {
  const PcnConfig config = small_config();
  PcnModel model = build_model(config);

  PolsarScene one;
  one.height = 1;
  one.width = 1;
  one.pixels = {{{1, 0}, {0, 0}, {0, 0}, {1, 0}}};
  const Tensor3 f1 = front_net_forward(encode_scene(one), model);
  CHECK(f1.h == 1);
  CHECK(f1.w == 1);
  CHECK(f1.d == 6);

  std::mt19937_64 rng(5);
  const Tensor3 f16 = front_net_forward(encode_scene(random_scene(rng, 16, 16)), model);
  CHECK(f16.h == 16);
  CHECK(f16.w == 16);
  CHECK(f16.d == 6);
}

TEST_CASE("default front net has 64 planes and zero input stays constant") {
  PcnConfig config;
  PcnModel model = build_model(config);
  PolsarScene zero;
  zero.height = 3;
  zero.width = 4;
  zero.pixels.assign(12, ScatteringMatrix{});
  const Tensor3 f = front_net_forward(encode_scene(zero), model);
  CHECK(f.h == 3);
  CHECK(f.w == 4);
  CHECK(f.d == 64);
  for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("stride-1 front net cannot be assembled into a model") {
  const PcnConfig config = PcnConfig::paper_front_preset();
  try {
    build_model(config);
    FAIL("expected ShapeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeError);
  }
  // The raw-only ablation never touches the front net.
  CHECK_NOTHROW(build_ablation_single_pathway(config, Pathways::RawOnly));

  PcnModel front_only;
  front_only.config = config;
  front_only.front[0] = ConvLayer(32, 1, 4, 1, same_padding(4));
  front_only.front[1] = ConvLayer(64, 32, 4, 2, {1, 1});
  PolsarScene s;
  s.height = 2;
  s.width = 2;
  s.pixels.assign(4, ScatteringMatrix{});
  const Tensor3 f = front_net_forward(encode_scene(s), front_only);
  CHECK(f.h == 4);
  CHECK(f.w == 4);
  CHECK(f.d == 64);
}

TEST_CASE("forward pass yields a probability map") {
  std::mt19937_64 rng(6);
  const PolsarScene scene = random_scene(rng, 8, 8);
  PcnModel model = fitted_model(scene, small_config(3));
  randomize_biases(model, 1);
  const Tensor3 p = pcn_forward(scene, model);
  REQUIRE(p.h == 8);
  REQUIRE(p.w == 8);
  REQUIRE(p.d == 3);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const auto px = p.pixel(i, j);
      double sum = 0.0;
      for (double v : px) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("zero fusion weights give a uniform map") {
  std::mt19937_64 rng(7);
  const PolsarScene scene = random_scene(rng, 6, 6);
  PcnModel model = fitted_model(scene, small_config(4));
  std::fill(model.fusion.weights.begin(), model.fusion.weights.end(), 0.0);
  const Tensor3 p = pcn_forward(scene, model);
  for (double v : p.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("argmax ties go to the lower class id") {
  Tensor3 p(1, 3, 3);
  p.data = {0.2, 0.4, 0.4, 0.5, 0.5, 0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(argmax_map(p) == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("coded pathway occupies the first feature_maps fusion channels") {
  std::mt19937_64 rng(8);
  const PolsarScene scene = random_scene(rng, 8, 8);
  const PcnConfig config = small_config(3);
  const int m = config.feature_maps;
  PcnModel model = fitted_model(scene, config);
  randomize_biases(model, 2);
  REQUIRE(model.fusion.in_depth == 2 * m);

  // Silence the raw half of the fusion input; the raw pathway then has no effect.
  for (int o = 0; o < model.fusion.kernel_count; ++o)
    for (int c = m; c < 2 * m; ++c) model.fusion.weight(o, c, 0, 0) = 0.0;
  const Tensor3 base = pcn_forward(scene, model);

  PcnModel raw_changed = model;
  for (double& w : raw_changed.raw.layers[8].weights) w *= -3.0;
  CHECK(pcn_forward(scene, raw_changed) == base);

  PcnModel coded_changed = model;
  for (double& w : coded_changed.coded.layers[8].weights) w *= -3.0;
  CHECK_FALSE(pcn_forward(scene, coded_changed) == base);
}

TEST_CASE("single pathway ablations fuse feature_maps channels") {
  std::mt19937_64 rng(9);
  const PolsarScene scene = random_scene(rng, 8, 4);
  const PcnConfig config = small_config(3);
  for (Pathways which : {Pathways::CodedOnly, Pathways::RawOnly}) {
    PcnModel model = build_ablation_single_pathway(config, which);
    model.normalization = fit_normalization(scene);
    CHECK(model.fusion.in_depth == config.feature_maps);
    CHECK(model.has_coded() == (which == Pathways::CodedOnly));
    CHECK(model.has_raw() == (which == Pathways::RawOnly));
    const Tensor3 p = pcn_forward(scene, model);
    CHECK(p.h == 8);
    CHECK(p.w == 4);
    CHECK(p.d == 3);
  }
  CHECK_THROWS_AS(build_ablation_single_pathway(config, Pathways::Dual), Error);
}

TEST_CASE("layer listing follows the documented order") {
  PcnModel model = build_model(small_config());
  const auto layers = trainable_layers(model);
  REQUIRE(layers.size() == 2 + 9 + 9 + 1);
  CHECK(layers.front().name == "front.0");
  CHECK(layers[2].name == "coded.e1");
  CHECK(layers[10].name == "coded.d9");
  CHECK(layers[11].name == "raw.e1");
  CHECK(layers.back().name == "fusion");

  PcnModel raw_only = build_ablation_single_pathway(small_config(), Pathways::RawOnly);
  CHECK(trainable_layers(raw_only).size() == 10);
}

TEST_CASE("odd and tiny scenes keep their shape") {
  std::mt19937_64 rng(10);
  const PcnConfig config = small_config(2);
  for (int h : {1, 2, 3, 5, 7})
    for (int w : {1, 3, 6}) {
      const PolsarScene scene = random_scene(rng, h, w);
      const PcnModel model = fitted_model(scene, config);
      const Tensor3 p = pcn_forward(scene, model);
      CHECK(p.h == h);
      CHECK(p.w == w);
      CHECK(p.d == 2);
      CHECK(p.all_finite());
      CHECK(predict_map(scene, model).size() == static_cast<std::size_t>(h * w));
    }
}

TEST_CASE("model construction is deterministic in the seed") {
  PcnConfig config = small_config();
  const PcnModel a = build_model(config);
  const PcnModel b = build_model(config);
  config.seed = 99;
  const PcnModel c = build_model(config);
  CHECK(a.fusion.weights == b.fusion.weights);
  CHECK(a.coded.layers[0].weights == b.coded.layers[0].weights);
  CHECK_FALSE(a.fusion.weights == c.fusion.weights);
  for (const auto& [name, layer] : trainable_layers(a))
    for (double v : layer->bias) CHECK(v == 0.0);
}

TEST_CASE("loss gradients match finite differences on selected weights") {
  std::mt19937_64 rng(11);
  const PolsarScene scene = random_scene(rng, 4, 4);
  PcnModel model = fitted_model(scene, small_config(3));
  randomize_biases(model, 3);
  std::vector<std::uint8_t> labels(16);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(i % 3);
  labels[5] = kIgnoreLabel;
  const PcnInputs inputs = prepare_inputs(scene, model);
  const auto lg = loss_and_gradients(inputs, model, labels);
  CHECK(lg.counted == 15);

  auto layers = trainable_layers(model);
  for (std::size_t li : {std::size_t{0}, std::size_t{6}, std::size_t{14}, layers.size() - 1}) {
    ConvLayer& layer = *layers[li].layer;
    const auto& g = lg.gradients.layers[li];
    for (std::size_t wi : {std::size_t{0}, layer.weights.size() / 2}) {
      const double saved = layer.weights[wi];
      const double eps = 1e-6;
      layer.weights[wi] = saved + eps;
      const double up = loss_and_gradients(inputs, model, labels).loss;
      layer.weights[wi] = saved - eps;
      const double down = loss_and_gradients(inputs, model, labels).loss;
      layer.weights[wi] = saved;
      const double numeric = (up - down) / (2 * eps);
      INFO(layers[li].name, " weight ", wi);
      CHECK(relative_error(g.grad_w[wi], numeric) < 1e-4);
    }
  }
}

TEST_CASE("channel concatenation and split are inverse") {
  std::mt19937_64 rng(12);
  const Tensor3 a = testing::random_tensor(rng, 3, 4, 2);
  const Tensor3 b = testing::random_tensor(rng, 3, 4, 5);
  const Tensor3 ab = concat_channels(a, b);
  CHECK(ab.d == 7);
  CHECK(ab.at(2, 3, 1) == a.at(2, 3, 1));
  CHECK(ab.at(2, 3, 2) == b.at(2, 3, 0));
  const auto [x, y] = split_channels(ab, 2);
  CHECK(x == a);
  CHECK(y == b);
  CHECK_THROWS_AS(concat_channels(a, testing::random_tensor(rng, 3, 3, 1)), Error);
}

TEST_CASE("constant scene gives a spatially periodic map away from the border") {
  PolsarScene scene;
  scene.height = 64;
  scene.width = 64;
  scene.pixels.assign(64 * 64, ScatteringMatrix{{0.7, -0.2}, {0.1, 0.3}, {0.1, 0.3}, {-0.4, 0.5}});
  PcnModel model = fitted_model(scene, small_config(3));
  const Tensor3 p = pcn_forward(scene, model);
  // Two pooling stages make the network equivariant to shifts of 4 pixels.
  double worst = 0.0;
  for (int i = 28; i < 32; ++i)
    for (int j = 28; j < 32; ++j)
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(p.at(i, j, c) - p.at(i + 4, j + 4, c)));
  CHECK(worst < 1e-12);
}
