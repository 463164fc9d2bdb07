#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "pcn/error.hpp"
#include "pcn/gradcheck.hpp"
#include "pcn/layers.hpp"
#include "pcn/polsar.hpp"
#include "support.hpp"

using namespace pcn;
using testing::random_tensor;

namespace {

ConvLayer random_layer(std::mt19937_64& rng, int kernels, int depth, int k, int s, Padding pad) {
  ConvLayer layer(kernels, depth, k, s, pad);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& w : layer.weights) w = u(rng);
  for (double& b : layer.bias) b = u(rng);
  return layer;
}

// Direct evaluation of the convolution sum with explicit zero padding.
Tensor3 naive_conv(const Tensor3& x, const ConvLayer& l, bool relu) {
  const int oh = (x.h + l.padding.before + l.padding.after - l.kernel_size) / l.stride + 1;
  const int ow = (x.w + l.padding.before + l.padding.after - l.kernel_size) / l.stride + 1;
  Tensor3 out(oh, ow, l.kernel_count);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j)
      for (int o = 0; o < l.kernel_count; ++o) {
        double acc = l.bias[static_cast<std::size_t>(o)];
        for (int mi = 0; mi < l.kernel_size; ++mi)
          for (int mj = 0; mj < l.kernel_size; ++mj) {
            const int r = i * l.stride + mi - l.padding.before;
            const int c = j * l.stride + mj - l.padding.before;
            if (r < 0 || c < 0 || r >= x.h || c >= x.w) continue;
            for (int ch = 0; ch < x.d; ++ch) acc += l.weight(o, ch, mi, mj) * x.at(r, c, ch);
          }
        out.at(i, j, o) = relu ? std::max(acc, 0.0) : acc;
      }
  return out;
}

double dot(const Tensor3& a, const Tensor3& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

}  // namespace

TEST_CASE("1x1 unit kernel is the identity") {
  std::mt19937_64 rng(41);
  const auto x = random_tensor(rng, 5, 4, 1);
  ConvLayer l(1, 1, 1, 1, {});
  l.weights = {1.0};
  CHECK(conv_forward(x, l, Activation::None) == x);
}

TEST_CASE("3x3 ones kernel counts nine cells") {
  Tensor3 x(5, 5, 1, 1.0);
  ConvLayer l(1, 1, 3, 1, {});
  l.weights.assign(9, 1.0);
  const auto y = conv_forward(x, l, Activation::None);
  CHECK(y.h == 3);
  CHECK(y.w == 3);
  for (double v : y.data) CHECK(v == 9.0);
}

TEST_CASE("convolution matches the direct sum") {
  std::mt19937_64 rng(42);
  const auto x = random_tensor(rng, 8, 8, 2);
  struct Case {
    int k, s;
    Padding pad;
  };
  for (const Case& c : {Case{3, 1, {1, 1}}, Case{4, 2, {1, 1}}, Case{5, 1, {2, 2}}, Case{4, 1, {1, 2}},
                        Case{2, 2, {0, 0}}, Case{3, 1, {0, 0}}}) {
    const auto l = random_layer(rng, 3, 2, c.k, c.s, c.pad);
    for (bool relu : {false, true}) {
      const auto fast = conv_forward(x, l, relu ? Activation::ReLU : Activation::None);
      const auto slow = naive_conv(x, l, relu);
      REQUIRE(fast.same_shape(slow));
      for (std::size_t i = 0; i < fast.data.size(); ++i)
        CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-12 * std::max(1.0, std::abs(slow.data[i])));
    }
  }
}

TEST_CASE("same padding keeps the spatial size") {
  std::mt19937_64 rng(43);
  for (int k : {1, 3, 5}) {
    const auto l = random_layer(rng, 2, 3, k, 1, same_padding(k));
    const auto y = conv_forward(random_tensor(rng, 7, 6, 3), l, Activation::ReLU);
    CHECK(y.h == 7);
    CHECK(y.w == 6);
  }
  CHECK(same_padding(4) == Padding{1, 2});
}

TEST_CASE("convolution shape errors name both shapes") {
  std::mt19937_64 rng(44);
  const auto l = random_layer(rng, 2, 3, 3, 1, {});
  try {
    conv_forward(random_tensor(rng, 5, 5, 2), l, Activation::None);
    FAIL("expected ShapeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeError);
    const std::string msg = e.what();
    CHECK(msg.find("5x5x2") != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
  // (6 + 0 - 3) / 2 is not integral.
  const auto strided = random_layer(rng, 1, 1, 3, 2, {});
  CHECK_THROWS_AS(conv_forward(random_tensor(rng, 6, 6, 1), strided, Activation::None), Error);
}

TEST_CASE("convolution without activation is affine") {
  std::mt19937_64 rng(45);
  const auto l = random_layer(rng, 3, 2, 3, 1, {1, 1});
  const auto x = random_tensor(rng, 6, 6, 2), y = random_tensor(rng, 6, 6, 2);
  const double a = 0.3, b = -1.7;
  Tensor3 mix(6, 6, 2);
  for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
  const auto cx = conv_forward(x, l, Activation::None), cy = conv_forward(y, l, Activation::None);
  const auto cm = conv_forward(mix, l, Activation::None);
  for (std::size_t i = 0; i < cm.data.size(); ++i) {
    const double bias = l.bias[i % 3];
    const double expect = a * cx.data[i] + b * cy.data[i] + (1.0 - a - b) * bias;
    CHECK(std::abs(cm.data[i] - expect) < 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("conv backward trivial cases") {
  std::mt19937_64 rng(46);
  const auto l = random_layer(rng, 2, 3, 3, 1, {1, 1});
  const auto x = random_tensor(rng, 4, 4, 3);
  const auto out = conv_forward(x, l, Activation::ReLU);
  const auto g = conv_backward(Tensor3(4, 4, 2), x, out, l, Activation::ReLU);
  for (double v : g.grad_x.data) CHECK(v == 0.0);
  for (double v : g.grad_w) CHECK(v == 0.0);
  for (double v : g.grad_b) CHECK(v == 0.0);

  ConvLayer id(1, 1, 1, 1, {});
  id.weights = {1.0};
  const auto xi = random_tensor(rng, 3, 5, 1);
  const auto go = random_tensor(rng, 3, 5, 1);
  CHECK(conv_backward(go, xi, conv_forward(xi, id, Activation::None), id, Activation::None).grad_x == go);
  CHECK_THROWS_AS(conv_backward(Tensor3(3, 3, 2), x, out, l, Activation::ReLU), Error);
}

TEST_CASE("conv gradients agree with central differences") {
  std::mt19937_64 rng(47);
  for (bool relu : {false, true}) {
    const Activation act = relu ? Activation::ReLU : Activation::None;
    auto l = random_layer(rng, 3, 2, 3, 2, {1, 0});
    auto x = random_tensor(rng, 6, 6, 2);
    const auto out = conv_forward(x, l, act);
    const auto w_out = random_tensor(rng, out.h, out.w, out.d);
    const auto objective = [&] { return dot(conv_forward(x, l, act), w_out); };
    const auto g = conv_backward(w_out, x, out, l, act);
    CHECK(max_gradient_error(l.weights, g.grad_w, objective) <= 1e-4);
    CHECK(max_gradient_error(l.bias, g.grad_b, objective) <= 1e-4);
    CHECK(max_gradient_error(x.data, g.grad_x.data, objective) <= 1e-4);
  }
}

TEST_CASE("maxpool and unpool on a 2x2 block") {
  Tensor3 x(2, 2, 1);
  x.data = {1, 2, 3, 4};
  const auto p = maxpool_forward(x, 2);
  CHECK(p.out.h == 1);
  CHECK(p.out.at(0, 0, 0) == 4.0);
  CHECK(p.record.indices == std::vector<int>{3});
  const auto u = unpool(p.out, p.record);
  CHECK(u.data == std::vector<double>{0, 0, 0, 4});
}

TEST_CASE("maxpool ties go to the first cell in scan order") {
  const Tensor3 x(4, 4, 2, 7.0);
  const auto p = maxpool_forward(x, 2);
  CHECK(p.record.indices == std::vector<int>{0, 0, 2, 2, 8, 8, 10, 10});
}

TEST_CASE("maxpool clips edge windows on odd sizes") {
  std::mt19937_64 rng(48);
  const auto x = random_tensor(rng, 5, 3, 2);
  const auto p = maxpool_forward(x, 2);
  CHECK(p.out.h == 3);
  CHECK(p.out.w == 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 2; ++c) {
        double best = -1e300;
        for (int r = 2 * i; r < std::min(2 * i + 2, 5); ++r)
          for (int q = 2 * j; q < std::min(2 * j + 2, 3); ++q) best = std::max(best, x.at(r, q, c));
        CHECK(p.out.at(i, j, c) == best);
      }
}

TEST_CASE("unpool writes only at recorded indices") {
  std::mt19937_64 rng(49);
  const auto x = random_tensor(rng, 8, 6, 3);
  const auto p = maxpool_forward(x, 2);
  const auto y = random_tensor(rng, p.out.h, p.out.w, 3);
  const auto u = unpool(y, p.record);
  std::vector<char> hit(u.data.size(), 0);
  for (std::size_t o = 0; o < p.out.pixels(); ++o)
    for (std::size_t c = 0; c < 3; ++c) {
      const auto idx = static_cast<std::size_t>(p.record.indices[o * 3 + c]);
      CHECK(u.data[idx * 3 + c] == y.data[o * 3 + c]);
      hit[idx * 3 + c] = 1;
    }
  for (std::size_t i = 0; i < u.data.size(); ++i)
    if (!hit[i]) CHECK(u.data[i] == 0.0);

  // maxpool(unpool(maxpool(x))) == maxpool(x) for positive maxima.
  auto pos = x;
  for (double& v : pos.data) v = std::abs(v) + 0.1;
  const auto first = maxpool_forward(pos, 2);
  const auto again = maxpool_forward(unpool(first.out, first.record), 2);
  CHECK(again.out == first.out);
  CHECK(again.record.indices == first.record.indices);
}

TEST_CASE("pool and unpool gradients agree with central differences") {
  std::mt19937_64 rng(50);
  auto x = random_tensor(rng, 6, 5, 2);
  const auto p = maxpool_forward(x, 2);
  const auto w = random_tensor(rng, p.out.h, p.out.w, 2);
  const auto gx = maxpool_backward(w, p.record);
  CHECK(max_gradient_error(x.data, gx.data, [&] { return dot(maxpool_forward(x, 2).out, w); }) <= 1e-4);

  auto y = random_tensor(rng, p.out.h, p.out.w, 2);
  const auto wu = random_tensor(rng, 6, 5, 2);
  const auto gy = unpool_backward(wu, p.record);
  CHECK(max_gradient_error(y.data, gy.data, [&] { return dot(unpool(y, p.record), wu); }) <= 1e-4);
}

TEST_CASE("softmax examples") {
  Tensor3 a(1, 1, 4, 3.0);
  for (double v : softmax_pixelwise(a).data) CHECK(v == doctest::Approx(0.25));
  Tensor3 big(1, 1, 2);
  big.data = {1000.0, 0.0};
  const auto p = softmax_pixelwise(big);
  CHECK(p.data[0] == 1.0);
  CHECK(p.data[1] == doctest::Approx(0.0));
  CHECK(p.all_finite());
}

TEST_CASE("softmax matches the direct formula and sums to one") {
  std::mt19937_64 rng(51);
  const auto a = random_tensor(rng, 4, 5, 6, 5.0);
  const auto p = softmax_pixelwise(a);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) {
      double z = 0, sum = 0;
      for (int c = 0; c < 6; ++c) z += std::exp(a.at(i, j, c));
      for (int c = 0; c < 6; ++c) {
        CHECK(std::abs(p.at(i, j, c) - std::exp(a.at(i, j, c)) / z) < 1e-12);
        CHECK(p.at(i, j, c) >= 0.0);
        sum += p.at(i, j, c);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("cross-entropy examples") {
  Tensor3 perfect(1, 2, 2);
  perfect.data = {1, 0, 0, 1};
  const std::vector<std::uint8_t> labels{0, 1};
  CHECK(cross_entropy_masked(perfect, labels).loss == 0.0);

  Tensor3 p(1, 2, 2);
  p.data = {0.7, 0.3, 0.2, 0.8};
  const auto r = cross_entropy_masked(p, labels);
  CHECK(r.loss == doctest::Approx(-std::log(0.7) - std::log(0.8)).epsilon(1e-15));
  CHECK(r.counted == 2);
  CHECK(r.grad.data[0] == doctest::Approx(-0.3));
  CHECK(r.grad.data[1] == doctest::Approx(0.3));

  const std::vector<std::uint8_t> ignored{kIgnoreLabel, kIgnoreLabel};
  const auto none = cross_entropy_masked(p, ignored);
  CHECK(none.loss == 0.0);
  CHECK(none.counted == 0);
  for (double v : none.grad.data) CHECK(v == 0.0);

  const std::vector<std::uint8_t> bad{0, 2};
  try {
    cross_entropy_masked(p, bad);
    FAIL("expected InvalidLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidLabel);
  }
}

TEST_CASE("activations at ignored pixels do not touch the loss") {
  std::mt19937_64 rng(52);
  auto a = random_tensor(rng, 4, 4, 3);
  std::vector<std::uint8_t> labels(16);
  for (std::size_t i = 0; i < 16; ++i) labels[i] = i % 3 == 0 ? kIgnoreLabel : static_cast<std::uint8_t>(i % 3);
  const auto base = cross_entropy_masked(softmax_pixelwise(a), labels);
  for (std::size_t i = 0; i < 16; ++i)
    if (labels[i] == kIgnoreLabel)
      for (std::size_t c = 0; c < 3; ++c) a.data[i * 3 + c] += 10.0 * static_cast<double>(c + 1);
  const auto moved = cross_entropy_masked(softmax_pixelwise(a), labels);
  CHECK(testing::same_bits(base.loss, moved.loss));
  CHECK(base.grad == moved.grad);
}

TEST_CASE("softmax plus cross-entropy gradient agrees with central differences") {
  std::mt19937_64 rng(53);
  auto a = random_tensor(rng, 3, 3, 4);
  std::vector<std::uint8_t> labels{0, 1, 2, 3, kIgnoreLabel, 1, 2, kIgnoreLabel, 0};
  const auto r = cross_entropy_masked(softmax_pixelwise(a), labels);
  CHECK(max_gradient_error(a.data, r.grad.data,
                           [&] { return cross_entropy_masked(softmax_pixelwise(a), labels).loss; }) <= 1e-4);
}

TEST_CASE("xavier bound, determinism and variance") {
  const auto w = xavier_init(1000, 3, 3, 5);
  for (double v : w) CHECK((v >= -1.0 && v <= 1.0));
  CHECK(w == xavier_init(1000, 3, 3, 5));
  CHECK(w != xavier_init(1000, 3, 3, 6));

  const auto big = xavier_init(100000, 10, 14, 99);
  const double bound = std::sqrt(6.0 / 24.0);
  double mean = 0, sq = 0;
  for (double v : big) mean += v;
  mean /= static_cast<double>(big.size());
  for (double v : big) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(big.size() - 1);
  CHECK(std::abs(var - bound * bound / 3.0) < 0.05 * bound * bound / 3.0);
  CHECK_THROWS_AS(xavier_init(4, 0, 3, 1), Error);
}

TEST_CASE("sgd momentum arithmetic") {
  std::vector<double> w{1.0};
  std::vector<double> g{1.0};
  OptimizerState state{0.01, 0.9, {}};
  const std::vector<std::span<double>> params{w};
  const std::vector<std::span<const double>> grads{g};
  sgd_momentum_step(params, grads, state);
  CHECK(state.velocity[0][0] == doctest::Approx(-0.01));
  CHECK(w[0] == doctest::Approx(0.99));

  g[0] = 0.0;
  double prev = state.velocity[0][0];
  for (int i = 0; i < 5; ++i) {
    sgd_momentum_step(params, grads, state);
    CHECK(state.velocity[0][0] == doctest::Approx(0.9 * prev));
    prev = state.velocity[0][0];
  }
}

TEST_CASE("sgd momentum converges on a quadratic bowl") {
  // f(w) = 0.5 * a * (w - 3)^2
  const double a = 2.0;
  std::vector<double> w{-4.0};
  std::vector<double> g{0.0};
  OptimizerState state{0.05, 0.9, {}};
  const std::vector<std::span<double>> params{w};
  const std::vector<std::span<const double>> grads{g};
  int steps = 0;
  while (steps < 500) {
    g[0] = a * (w[0] - 3.0);
    sgd_momentum_step(params, grads, state);
    ++steps;
  }
  CHECK(std::abs(w[0] - 3.0) < 1e-6);
}

TEST_CASE("sgd rejects mismatched blocks") {
  std::vector<double> w{1.0, 2.0};
  std::vector<double> g{1.0};
  OptimizerState state;
  const std::vector<std::span<double>> params{w};
  const std::vector<std::span<const double>> grads{g};
  CHECK_THROWS_AS(sgd_momentum_step(params, grads, state), Error);
}

TEST_CASE("gradcheck report passes every entry") {
  const auto report = run_gradcheck(7);
  CHECK(report.entries.size() == 6);
  for (const auto& e : report.entries) {
    INFO(e.name << " " << e.max_relative_error);
    CHECK(e.passed());
  }
  CHECK(report.passed());
}
