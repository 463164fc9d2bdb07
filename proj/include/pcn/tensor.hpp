#pragma once

#include <span>
#include <string>
#include <vector>

namespace pcn {

/// h x w x d array of doubles. Layout is row-major over pixels with the
/// channel index fastest: data[(i * w + j) * d + c].
struct Tensor3 {
  int h = 0;
  int w = 0;
  int d = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int height, int width, int depth, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }

  double& at(int i, int j, int c) { return data[index(i, j, c)]; }
  double at(int i, int j, int c) const { return data[index(i, j, c)]; }

  std::span<double> pixel(int i, int j) { return {data.data() + index(i, j, 0), static_cast<std::size_t>(d)}; }
  std::span<const double> pixel(int i, int j) const {
    return {data.data() + index(i, j, 0), static_cast<std::size_t>(d)};
  }

  bool same_shape(const Tensor3& other) const { return h == other.h && w == other.w && d == other.d; }
  std::string shape_string() const;
  bool all_finite() const;

  Tensor3& operator+=(const Tensor3& other);

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(w) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(d) +
           static_cast<std::size_t>(c);
  }
};

/// Channel-wise concatenation: a's channels first, then b's.
Tensor3 concat_channels(const Tensor3& a, const Tensor3& b);

/// Splits channels [0, first_depth) and [first_depth, d).
std::pair<Tensor3, Tensor3> split_channels(const Tensor3& t, int first_depth);

}  // namespace pcn
