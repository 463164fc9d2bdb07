#include "pcn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "pcn/error.hpp"

namespace pcn {

Tensor3::Tensor3(int height, int width, int depth, double fill) : h(height), w(width), d(depth) {
  if (height < 0 || width < 0 || depth < 0) fail(ErrorCode::ShapeError, "negative tensor dimension");
  data.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * static_cast<std::size_t>(depth),
              fill);
}

std::string Tensor3::shape_string() const {
  return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(d);
}

bool Tensor3::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  if (!same_shape(other)) {
    fail(ErrorCode::ShapeError, "cannot add " + other.shape_string() + " to " + shape_string());
  }
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
  return *this;
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.h != b.h || a.w != b.w) {
    fail(ErrorCode::ShapeError, "cannot stack " + a.shape_string() + " with " + b.shape_string());
  }
  Tensor3 out(a.h, a.w, a.d + b.d);
  for (int i = 0; i < a.h; ++i) {
    for (int j = 0; j < a.w; ++j) {
      auto dst = out.pixel(i, j);
      const auto pa = a.pixel(i, j);
      const auto pb = b.pixel(i, j);
      std::copy(pa.begin(), pa.end(), dst.begin());
      std::copy(pb.begin(), pb.end(), dst.begin() + a.d);
    }
  }
  return out;
}

std::pair<Tensor3, Tensor3> split_channels(const Tensor3& t, int first_depth) {
  if (first_depth < 0 || first_depth > t.d) fail(ErrorCode::ShapeError, "channel split out of range");
  Tensor3 a(t.h, t.w, first_depth);
  Tensor3 b(t.h, t.w, t.d - first_depth);
  for (int i = 0; i < t.h; ++i) {
    for (int j = 0; j < t.w; ++j) {
      const auto src = t.pixel(i, j);
      std::copy(src.begin(), src.begin() + first_depth, a.pixel(i, j).begin());
      std::copy(src.begin() + first_depth, src.end(), b.pixel(i, j).begin());
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace pcn
