#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcn/tensor.hpp"

namespace pcn {

enum class Activation { None, ReLU };

/// Zero padding added before (top/left) and after (bottom/right) the input.
struct Padding {
  int before = 0;
  int after = 0;

  friend bool operator==(const Padding&, const Padding&) = default;
};

/// Square-kernel 2-D convolution. Weights are laid out
/// (kernel_count, in_depth, kernel_size, kernel_size), one bias per kernel.
struct ConvLayer {
  int kernel_count = 0;
  int in_depth = 0;
  int kernel_size = 1;
  int stride = 1;
  Padding padding;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(int kernels, int depth, int k, int s, Padding pad);

  std::size_t weight_count() const {
    return static_cast<std::size_t>(kernel_count) * static_cast<std::size_t>(in_depth) *
           static_cast<std::size_t>(kernel_size) * static_cast<std::size_t>(kernel_size);
  }
  double& weight(int kernel, int channel, int mi, int mj) {
    return weights[((static_cast<std::size_t>(kernel) * static_cast<std::size_t>(in_depth) +
                     static_cast<std::size_t>(channel)) *
                        static_cast<std::size_t>(kernel_size) +
                    static_cast<std::size_t>(mi)) *
                       static_cast<std::size_t>(kernel_size) +
                   static_cast<std::size_t>(mj)];
  }
  double weight(int kernel, int channel, int mi, int mj) const {
    return const_cast<ConvLayer*>(this)->weight(kernel, channel, mi, mj);
  }

  /// Output extent along one axis; ShapeError unless the stride divides evenly.
  int output_extent(int extent) const;
};

/// "same" padding for an odd kernel at stride 1.
Padding same_padding(int kernel_size);

struct ConvGrads {
  Tensor3 grad_x;
  std::vector<double> grad_w;
  std::vector<double> grad_b;
};

Tensor3 conv_forward(const Tensor3& x, const ConvLayer& layer, Activation activation);

/// `out` is the cached forward output; it supplies the ReLU mask. grad_x is
/// left empty when `need_grad_x` is false.
ConvGrads conv_backward(const Tensor3& grad_out, const Tensor3& x, const Tensor3& out, const ConvLayer& layer,
                        Activation activation, bool need_grad_x = true);

/// Argmax positions of a max-pooling pass. indices[(o * d) + c] is the flat
/// input pixel index (row * in_w + col) that won output cell o, channel c.
struct PoolRecord {
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;
  int depth = 0;
  int window = 0;
  std::vector<int> indices;
};

struct PoolResult {
  Tensor3 out;
  PoolRecord record;
};

/// Non-overlapping window x window max pooling. Edge windows that run past
/// the input are clipped, which matches replicate padding under the
/// first-in-scan-order tie rule.
PoolResult maxpool_forward(const Tensor3& x, int window);
Tensor3 maxpool_backward(const Tensor3& grad_out, const PoolRecord& record);

/// Places every value at its recorded argmax; zeros elsewhere.
Tensor3 unpool(const Tensor3& y, const PoolRecord& record);
Tensor3 unpool_backward(const Tensor3& grad_out, const PoolRecord& record);

Tensor3 softmax_pixelwise(const Tensor3& a);

struct LossResult {
  double loss = 0.0;
  /// Gradient with respect to the softmax inputs: p - onehot on labelled
  /// pixels, exactly zero on ignored ones.
  Tensor3 grad;
  std::size_t counted = 0;
};

/// Negative log-likelihood summed over labelled pixels. `labels` holds one
/// class id or kIgnoreLabel per pixel.
LossResult cross_entropy_masked(const Tensor3& p, std::span<const std::uint8_t> labels);

/// Glorot uniform samples on [-sqrt(6 / (fan_in + fan_out)), +sqrt(...)].
std::vector<double> xavier_init(std::size_t count, int fan_in, int fan_out, std::uint64_t seed);

struct OptimizerState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<std::vector<double>> velocity;
};

/// Classical momentum: v <- momentum * v - lr * g; w <- w + v. Velocity
/// buffers are created on the first call.
void sgd_momentum_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                       OptimizerState& state);

}  // namespace pcn
