#include "pcn/coding.hpp"

#include <cmath>
#include <string>

#include "pcn/error.hpp"

namespace pcn {

namespace {

constexpr const char* kQuadrantNames[4] = {"HH", "HV", "VH", "VV"};

// -0.0 and +0.0 share one code.
double unsigned_zero(double v) { return v == 0.0 ? 0.0 : v; }

double column_value(double positive, double negative, int column) {
  if (!(positive >= 0.0) || !(negative >= 0.0) || !std::isfinite(positive) || !std::isfinite(negative)) {
    fail(ErrorCode::MalformedBlock, "column " + std::to_string(column) + " holds a negative or non-finite entry");
  }
  if (positive != 0.0 && negative != 0.0) {
    fail(ErrorCode::MalformedBlock, "column " + std::to_string(column) + " has both rows nonzero");
  }
  return positive - negative;
}

CodedBlock block_at(const CodedTile& tile, int quadrant) {
  const int r0 = (quadrant / 2) * 2;
  const int c0 = (quadrant % 2) * 2;
  CodedBlock block;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) block.b[r][c] = tile[r0 + r][c0 + c];
  return block;
}

void place(CodedTile& tile, int quadrant, const CodedBlock& block) {
  const int r0 = (quadrant / 2) * 2;
  const int c0 = (quadrant % 2) * 2;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) tile[r0 + r][c0 + c] = block.b[r][c];
}

}  // namespace

CodedBlock encode_complex(Complex z) {
  const double x = unsigned_zero(z.real());
  const double y = unsigned_zero(z.imag());
  if (!std::isfinite(x) || !std::isfinite(y)) fail(ErrorCode::InvalidInput, "cannot encode a non-finite complex value");

  CodedBlock out;
  if (x >= 0.0 && y <= 0.0) {
    out.b = {{{x, 0.0}, {0.0, -y}}};
  } else if (x >= 0.0) {
    out.b = {{{x, y}, {0.0, 0.0}}};
  } else if (y > 0.0) {
    out.b = {{{0.0, y}, {-x, 0.0}}};
  } else {
    out.b = {{{0.0, 0.0}, {-x, -y}}};
  }
  // y == 0 leaves -y == -0.0 in the first case.
  for (auto& row : out.b)
    for (auto& v : row) v = unsigned_zero(v);
  return out;
}

Complex decode_complex(const CodedBlock& block) {
  const double re = column_value(block.b[0][0], block.b[1][0], 0);
  const double im = column_value(block.b[0][1], block.b[1][1], 1);
  return {unsigned_zero(re), unsigned_zero(im)};
}

CodedTile encode_matrix(const ScatteringMatrix& s) {
  CodedTile tile{};
  place(tile, 0, encode_complex(s.hh));
  place(tile, 1, encode_complex(s.hv));
  place(tile, 2, encode_complex(s.vh));
  place(tile, 3, encode_complex(s.vv));
  return tile;
}

ScatteringMatrix decode_matrix(const CodedTile& tile) {
  std::array<Complex, 4> entries;
  for (int q = 0; q < 4; ++q) {
    try {
      entries[static_cast<std::size_t>(q)] = decode_complex(block_at(tile, q));
    } catch (const Error& e) {
      fail(e.code(), std::string("quadrant ") + std::to_string(q) + " (" + kQuadrantNames[q] + "): " + e.what());
    }
  }
  return {entries[0], entries[1], entries[2], entries[3]};
}

CodedMatrix encode_scene(const PolsarScene& scene) {
  scene.validate();
  CodedMatrix out{4 * scene.height, 4 * scene.width, {}};
  out.values.assign(static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(out.cols), 0.0);
  for (int i = 0; i < scene.height; ++i) {
    for (int j = 0; j < scene.width; ++j) {
      const CodedTile tile = encode_matrix(scene.at(i, j));
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) out(4 * i + r, 4 * j + c) = tile[r][c];
    }
  }
  return out;
}

PolsarScene decode_scene(const CodedMatrix& coded) {
  if (coded.rows <= 0 || coded.cols <= 0 || coded.rows % 4 != 0 || coded.cols % 4 != 0) {
    fail(ErrorCode::ShapeError, "coded matrix " + std::to_string(coded.rows) + "x" + std::to_string(coded.cols) +
                                    " is not a positive multiple of 4 in both dimensions");
  }
  if (coded.values.size() != static_cast<std::size_t>(coded.rows) * static_cast<std::size_t>(coded.cols)) {
    fail(ErrorCode::ShapeError, "coded matrix payload does not match its dimensions");
  }
  PolsarScene scene;
  scene.height = coded.rows / 4;
  scene.width = coded.cols / 4;
  scene.pixels.reserve(static_cast<std::size_t>(scene.height) * static_cast<std::size_t>(scene.width));
  for (int i = 0; i < scene.height; ++i) {
    for (int j = 0; j < scene.width; ++j) {
      CodedTile tile;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) tile[r][c] = coded(4 * i + r, 4 * j + c);
      try {
        scene.pixels.push_back(decode_matrix(tile));
      } catch (const Error& e) {
        fail(e.code(), "pixel (" + std::to_string(i) + "," + std::to_string(j) + ") " + e.what());
      }
    }
  }
  return scene;
}

}  // namespace pcn
