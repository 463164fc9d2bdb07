#include "pcn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "pcn/error.hpp"
#include "pcn/polsar.hpp"

namespace pcn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

std::string layer_string(const ConvLayer& layer) {
  return std::to_string(layer.kernel_count) + "x" + std::to_string(layer.in_depth) + "x" +
         std::to_string(layer.kernel_size) + "x" + std::to_string(layer.kernel_size) + "/s" +
         std::to_string(layer.stride);
}

struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
  int patch = 0;  // k * k * in_depth
};

ConvGeometry geometry(const Tensor3& x, const ConvLayer& layer) {
  if (x.d != layer.in_depth) {
    fail(ErrorCode::ShapeError,
         "conv input " + x.shape_string() + " does not match layer " + layer_string(layer) + " (in_depth " +
             std::to_string(layer.in_depth) + ")");
  }
  return {layer.output_extent(x.h), layer.output_extent(x.w), layer.kernel_size * layer.kernel_size * layer.in_depth};
}

bool is_pointwise(const ConvLayer& layer) {
  return layer.kernel_size == 1 && layer.stride == 1 && layer.padding == Padding{};
}

// Rows are output pixels, columns run over (mi, mj, channel).
RowMatrix im2col(const Tensor3& x, const ConvLayer& layer, const ConvGeometry& g) {
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(g.out_h) * g.out_w, g.patch);
  const int k = layer.kernel_size;
  for (int oi = 0; oi < g.out_h; ++oi) {
    for (int oj = 0; oj < g.out_w; ++oj) {
      double* row = cols.data() + (static_cast<std::size_t>(oi) * static_cast<std::size_t>(g.out_w) +
                                   static_cast<std::size_t>(oj)) *
                                      static_cast<std::size_t>(g.patch);
      for (int mi = 0; mi < k; ++mi) {
        const int ii = oi * layer.stride + mi - layer.padding.before;
        if (ii < 0 || ii >= x.h) continue;
        for (int mj = 0; mj < k; ++mj) {
          const int jj = oj * layer.stride + mj - layer.padding.before;
          if (jj < 0 || jj >= x.w) continue;
          const auto src = x.pixel(ii, jj);
          std::copy(src.begin(), src.end(), row + (mi * k + mj) * x.d);
        }
      }
    }
  }
  return cols;
}

void col2im_add(const RowMatrix& cols, const ConvLayer& layer, const ConvGeometry& g, Tensor3& grad_x) {
  const int k = layer.kernel_size;
  for (int oi = 0; oi < g.out_h; ++oi) {
    for (int oj = 0; oj < g.out_w; ++oj) {
      const double* row = cols.data() + (static_cast<std::size_t>(oi) * static_cast<std::size_t>(g.out_w) +
                                         static_cast<std::size_t>(oj)) *
                                            static_cast<std::size_t>(g.patch);
      for (int mi = 0; mi < k; ++mi) {
        const int ii = oi * layer.stride + mi - layer.padding.before;
        if (ii < 0 || ii >= grad_x.h) continue;
        for (int mj = 0; mj < k; ++mj) {
          const int jj = oj * layer.stride + mj - layer.padding.before;
          if (jj < 0 || jj >= grad_x.w) continue;
          auto dst = grad_x.pixel(ii, jj);
          const double* src = row + (mi * k + mj) * grad_x.d;
          for (int c = 0; c < grad_x.d; ++c) dst[static_cast<std::size_t>(c)] += src[c];
        }
      }
    }
  }
}

// (kernel_count, in_depth, k, k) -> kernel_count x (k, k, in_depth).
RowMatrix gemm_weights(const ConvLayer& layer) {
  const int k = layer.kernel_size;
  RowMatrix w(layer.kernel_count, k * k * layer.in_depth);
  for (int o = 0; o < layer.kernel_count; ++o)
    for (int c = 0; c < layer.in_depth; ++c)
      for (int mi = 0; mi < k; ++mi)
        for (int mj = 0; mj < k; ++mj) w(o, (mi * k + mj) * layer.in_depth + c) = layer.weight(o, c, mi, mj);
  return w;
}

void scatter_weight_grad(const RowMatrix& gw, const ConvLayer& layer, std::vector<double>& out) {
  const int k = layer.kernel_size;
  out.assign(layer.weight_count(), 0.0);
  std::size_t n = 0;
  for (int o = 0; o < layer.kernel_count; ++o)
    for (int c = 0; c < layer.in_depth; ++c)
      for (int mi = 0; mi < k; ++mi)
        for (int mj = 0; mj < k; ++mj) out[n++] = gw(o, (mi * k + mj) * layer.in_depth + c);
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ConvLayer::ConvLayer(int kernels, int depth, int k, int s, Padding pad)
    : kernel_count(kernels), in_depth(depth), kernel_size(k), stride(s), padding(pad) {
  if (kernels < 1 || depth < 1 || k < 1 || s < 1 || pad.before < 0 || pad.after < 0) {
    fail(ErrorCode::ShapeError, "invalid conv layer " + layer_string(*this));
  }
  weights.assign(weight_count(), 0.0);
  bias.assign(static_cast<std::size_t>(kernels), 0.0);
}

int ConvLayer::output_extent(int extent) const {
  const int span = extent + padding.before + padding.after - kernel_size;
  if (extent < 1 || span < 0 || span % stride != 0) {
    fail(ErrorCode::ShapeError, "extent " + std::to_string(extent) + " with padding (" +
                                    std::to_string(padding.before) + "," + std::to_string(padding.after) +
                                    ") does not tile layer " + layer_string(*this));
  }
  return span / stride + 1;
}

Padding same_padding(int kernel_size) {
  const int total = kernel_size - 1;
  return {total / 2, total - total / 2};
}

Tensor3 conv_forward(const Tensor3& x, const ConvLayer& layer, Activation activation) {
  const auto g = geometry(x, layer);
  Tensor3 out(g.out_h, g.out_w, layer.kernel_count);
  const RowMatrix w = gemm_weights(layer);
  RowMap o(out.data.data(), static_cast<Eigen::Index>(out.pixels()), layer.kernel_count);
  if (is_pointwise(layer)) {
    ConstRowMap cols(x.data.data(), static_cast<Eigen::Index>(x.pixels()), g.patch);
    o.noalias() = cols * w.transpose();
  } else {
    o.noalias() = im2col(x, layer, g) * w.transpose();
  }
  const Eigen::Map<const Eigen::RowVectorXd> b(layer.bias.data(), layer.kernel_count);
  o.rowwise() += b;
  if (activation == Activation::ReLU) {
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  }
  return out;
}

ConvGrads conv_backward(const Tensor3& grad_out, const Tensor3& x, const Tensor3& out, const ConvLayer& layer,
                        Activation activation, bool need_grad_x) {
  const auto g = geometry(x, layer);
  if (grad_out.h != g.out_h || grad_out.w != g.out_w || grad_out.d != layer.kernel_count) {
    fail(ErrorCode::ShapeError, "conv grad " + grad_out.shape_string() + " does not match forward output " +
                                    std::to_string(g.out_h) + "x" + std::to_string(g.out_w) + "x" +
                                    std::to_string(layer.kernel_count));
  }
  if (activation == Activation::ReLU && !out.same_shape(grad_out)) {
    fail(ErrorCode::ShapeError, "cached conv output " + out.shape_string() + " does not match " +
                                    grad_out.shape_string());
  }

  RowMatrix delta = ConstRowMap(grad_out.data.data(), static_cast<Eigen::Index>(grad_out.pixels()), grad_out.d);
  if (activation == Activation::ReLU) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      if (!(out.data[i] > 0.0)) delta.data()[i] = 0.0;
  }

  ConvGrads grads;
  const Eigen::RowVectorXd gb = delta.colwise().sum();
  grads.grad_b.assign(gb.data(), gb.data() + gb.size());

  const bool pointwise = is_pointwise(layer);
  RowMatrix cols;
  if (!pointwise) cols = im2col(x, layer, g);
  ConstRowMap col_view(pointwise ? x.data.data() : cols.data(), static_cast<Eigen::Index>(g.out_h) * g.out_w,
                       g.patch);
  const RowMatrix gw = delta.transpose() * col_view;
  scatter_weight_grad(gw, layer, grads.grad_w);

  if (need_grad_x) {
    const RowMatrix w = gemm_weights(layer);
    grads.grad_x = Tensor3(x.h, x.w, x.d);
    if (pointwise) {
      RowMap gx(grads.grad_x.data.data(), static_cast<Eigen::Index>(x.pixels()), x.d);
      gx.noalias() = delta * w;
    } else {
      const RowMatrix gcols = delta * w;
      col2im_add(gcols, layer, g, grads.grad_x);
    }
  }
  return grads;
}

PoolResult maxpool_forward(const Tensor3& x, int window) {
  if (window < 1) fail(ErrorCode::ShapeError, "pooling window must be >= 1");
  if (x.h < 1 || x.w < 1) fail(ErrorCode::ShapeError, "cannot pool empty tensor " + x.shape_string());
  PoolResult result;
  auto& rec = result.record;
  rec.in_h = x.h;
  rec.in_w = x.w;
  rec.out_h = (x.h + window - 1) / window;
  rec.out_w = (x.w + window - 1) / window;
  rec.depth = x.d;
  rec.window = window;
  rec.indices.assign(static_cast<std::size_t>(rec.out_h) * static_cast<std::size_t>(rec.out_w) *
                         static_cast<std::size_t>(x.d),
                     0);
  result.out = Tensor3(rec.out_h, rec.out_w, x.d);

  for (int oi = 0; oi < rec.out_h; ++oi) {
    for (int oj = 0; oj < rec.out_w; ++oj) {
      const int i_end = std::min(x.h, (oi + 1) * window);
      const int j_end = std::min(x.w, (oj + 1) * window);
      const std::size_t o = static_cast<std::size_t>(oi) * static_cast<std::size_t>(rec.out_w) +
                            static_cast<std::size_t>(oj);
      for (int c = 0; c < x.d; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        int best_index = oi * window * x.w + oj * window;
        for (int i = oi * window; i < i_end; ++i) {
          for (int j = oj * window; j < j_end; ++j) {
            const double v = x.at(i, j, c);
            if (v > best) {
              best = v;
              best_index = i * x.w + j;
            }
          }
        }
        result.out.at(oi, oj, c) = best;
        rec.indices[o * static_cast<std::size_t>(x.d) + static_cast<std::size_t>(c)] = best_index;
      }
    }
  }
  return result;
}

namespace {

void check_pooled_shape(const Tensor3& t, const PoolRecord& rec, const char* what) {
  if (t.h != rec.out_h || t.w != rec.out_w || t.d != rec.depth) {
    fail(ErrorCode::ShapeError, std::string(what) + " input " + t.shape_string() + " does not match pool record " +
                                    std::to_string(rec.out_h) + "x" + std::to_string(rec.out_w) + "x" +
                                    std::to_string(rec.depth));
  }
}

}  // namespace

Tensor3 maxpool_backward(const Tensor3& grad_out, const PoolRecord& rec) {
  return unpool(grad_out, rec);
}

Tensor3 unpool(const Tensor3& y, const PoolRecord& rec) {
  check_pooled_shape(y, rec, "unpool");
  Tensor3 out(rec.in_h, rec.in_w, rec.depth);
  const std::size_t d = static_cast<std::size_t>(rec.depth);
  for (std::size_t o = 0; o < y.pixels(); ++o) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto target = static_cast<std::size_t>(rec.indices[o * d + c]);
      out.data[target * d + c] += y.data[o * d + c];
    }
  }
  return out;
}

Tensor3 unpool_backward(const Tensor3& grad_out, const PoolRecord& rec) {
  if (grad_out.h != rec.in_h || grad_out.w != rec.in_w || grad_out.d != rec.depth) {
    fail(ErrorCode::ShapeError, "unpool grad " + grad_out.shape_string() + " does not match record input shape");
  }
  Tensor3 out(rec.out_h, rec.out_w, rec.depth);
  const std::size_t d = static_cast<std::size_t>(rec.depth);
  for (std::size_t o = 0; o < out.pixels(); ++o) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto source = static_cast<std::size_t>(rec.indices[o * d + c]);
      out.data[o * d + c] = grad_out.data[source * d + c];
    }
  }
  return out;
}

Tensor3 softmax_pixelwise(const Tensor3& a) {
  Tensor3 p(a.h, a.w, a.d);
  const std::size_t d = static_cast<std::size_t>(a.d);
  for (std::size_t px = 0; px < a.pixels(); ++px) {
    const double* src = a.data.data() + px * d;
    double* dst = p.data.data() + px * d;
    const double peak = *std::max_element(src, src + d);
    double sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dst[c] = std::exp(src[c] - peak);
      sum += dst[c];
    }
    for (std::size_t c = 0; c < d; ++c) dst[c] /= sum;
  }
  return p;
}

LossResult cross_entropy_masked(const Tensor3& p, std::span<const std::uint8_t> labels) {
  if (labels.size() != p.pixels()) {
    fail(ErrorCode::ShapeError, "label grid has " + std::to_string(labels.size()) + " cells, probabilities " +
                                    p.shape_string());
  }
  LossResult result;
  result.grad = Tensor3(p.h, p.w, p.d);
  const std::size_t d = static_cast<std::size_t>(p.d);
  for (std::size_t px = 0; px < labels.size(); ++px) {
    const auto label = labels[px];
    if (label == kIgnoreLabel) continue;
    if (label >= p.d) {
      fail(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " >= class count " + std::to_string(p.d));
    }
    const double* prob = p.data.data() + px * d;
    double* g = result.grad.data.data() + px * d;
    result.loss -= std::log(std::max(prob[label], std::numeric_limits<double>::min()));
    for (std::size_t c = 0; c < d; ++c) g[c] = prob[c];
    g[label] -= 1.0;
    ++result.counted;
  }
  return result;
}

std::vector<double> xavier_init(std::size_t count, int fan_in, int fan_out, std::uint64_t seed) {
  if (fan_in < 1 || fan_out < 1) fail(ErrorCode::InvalidInput, "xavier fan_in and fan_out must be >= 1");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::vector<double> w(count);
  for (double& v : w) v = bound * (2.0 * unit_uniform(rng) - 1.0);
  return w;
}

void sgd_momentum_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                       OptimizerState& state) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::ShapeError, "optimizer received " + std::to_string(params.size()) + " parameter blocks and " +
                                    std::to_string(grads.size()) + " gradient blocks");
  }
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.emplace_back(p.size(), 0.0);
  }
  if (state.velocity.size() != params.size()) fail(ErrorCode::ShapeError, "velocity block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& v = state.velocity[b];
    if (params[b].size() != grads[b].size() || v.size() != params[b].size()) {
      fail(ErrorCode::ShapeError, "parameter block " + std::to_string(b) + " size mismatch");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = state.momentum * v[i] - state.learning_rate * grads[b][i];
      params[b][i] += v[i];
    }
  }
}

}  // namespace pcn
