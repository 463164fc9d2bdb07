#include "pcn/scene_io.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <string>

#include "binary.hpp"
#include "pcn/error.hpp"

namespace pcn {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace detail

namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 31;

std::size_t checked_cells(std::uint64_t a, std::uint64_t b, std::uint64_t per_cell, const std::string& what) {
  if (a == 0 || b == 0) fail(ErrorCode::InvalidInput, what + ": header dimensions must be positive");
  if (a > kMaxCells || b > kMaxCells || a * b > kMaxCells || per_cell == 0 || a * b * per_cell > kMaxCells * 8) {
    fail(ErrorCode::DimOverflow, what + ": header dimensions " + std::to_string(a) + "x" + std::to_string(b) +
                                     " overflow the supported size");
  }
  return static_cast<std::size_t>(a * b * per_cell);
}

void expect_payload(const ByteReader& in, std::size_t payload_bytes, const std::string& what) {
  if (in.remaining() < payload_bytes) {
    fail(ErrorCode::TruncatedPayload, what + ": expected " + std::to_string(in.position() + payload_bytes) +
                                          " bytes, file has " + std::to_string(in.position() + in.remaining()));
  }
  if (in.remaining() > payload_bytes) {
    fail(ErrorCode::InvalidInput, what + ": " + std::to_string(in.remaining() - payload_bytes) + " trailing bytes");
  }
}

void expect_magic(ByteReader& in, std::string_view magic, const std::string& what) {
  if (in.remaining() < magic.size() || in.bytes(magic.size()) != magic) {
    fail(ErrorCode::BadMagic, what + ": missing '" + std::string(magic) + "' magic");
  }
}

// PNM header token, skipping whitespace and comments.
std::string pnm_token(const std::vector<char>& data, std::size_t& pos, const std::string& what) {
  while (pos < data.size()) {
    if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) token += data[pos++];
  if (token.empty()) fail(ErrorCode::TruncatedPayload, what + ": incomplete header");
  return token;
}

int pnm_int(const std::vector<char>& data, std::size_t& pos, const std::string& what) {
  const std::string t = pnm_token(data, pos, what);
  for (char ch : t)
    if (!std::isdigit(static_cast<unsigned char>(ch))) fail(ErrorCode::InvalidInput, what + ": bad header field");
  if (t.size() > 9) fail(ErrorCode::DimOverflow, what + ": header value too large");
  return std::stoi(t);
}

}  // namespace

std::vector<char> encode_scene_file(const PolsarScene& scene) {
  scene.validate();
  ByteWriter out;
  out.bytes("PSC1");
  out.u32(static_cast<std::uint32_t>(scene.height));
  out.u32(static_cast<std::uint32_t>(scene.width));
  out.u32(0);
  for (const auto& s : scene.pixels) {
    for (const Complex& z : {s.hh, s.hv, s.vh, s.vv}) {
      out.f32(static_cast<float>(z.real()));
      out.f32(static_cast<float>(z.imag()));
    }
  }
  return out.buffer();
}

PolsarScene decode_scene_file(const std::vector<char>& bytes) {
  const std::string what = "scene file";
  ByteReader in(bytes, what);
  expect_magic(in, "PSC1", what);
  const auto height = in.u32();
  const auto width = in.u32();
  const auto flags = in.u32();
  if (flags & kSceneFlagPlanes) fail(ErrorCode::InvalidInput, what + ": holds feature planes, not a scene");
  const std::size_t floats = checked_cells(height, width, 8, what);
  expect_payload(in, floats * 4, what);

  PolsarScene scene;
  scene.height = static_cast<int>(height);
  scene.width = static_cast<int>(width);
  scene.pixels.resize(static_cast<std::size_t>(height) * width);
  for (auto& s : scene.pixels) {
    for (Complex* z : {&s.hh, &s.hv, &s.vh, &s.vv}) {
      const double re = in.f32();
      const double im = in.f32();
      *z = Complex(re, im);
    }
  }
  scene.validate();
  return scene;
}

void save_scene(const PolsarScene& scene, const std::filesystem::path& path) {
  detail::write_file(path, encode_scene_file(scene));
}

PolsarScene load_scene(const std::filesystem::path& path) { return decode_scene_file(detail::read_file(path)); }

void save_planes(const std::filesystem::path& path, int height, int width, int channels,
                 std::span<const double> values) {
  if (height <= 0 || width <= 0 || channels <= 0 ||
      values.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                           static_cast<std::size_t>(channels)) {
    fail(ErrorCode::ShapeError, "plane payload does not match its dimensions");
  }
  ByteWriter out;
  out.bytes("PSC1");
  out.u32(static_cast<std::uint32_t>(height));
  out.u32(static_cast<std::uint32_t>(width));
  out.u32(kSceneFlagPlanes);
  out.u32(static_cast<std::uint32_t>(channels));
  for (double v : values) out.f32(static_cast<float>(v));
  detail::write_file(path, out.buffer());
}

PlaneFile load_planes(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string what = "plane file " + path.string();
  ByteReader in(bytes, what);
  expect_magic(in, "PSC1", what);
  PlaneFile planes;
  const auto height = in.u32();
  const auto width = in.u32();
  const auto flags = in.u32();
  const auto channels = (flags & kSceneFlagPlanes) ? in.u32() : 8u;
  const std::size_t floats = checked_cells(height, width, channels, what);
  expect_payload(in, floats * 4, what);
  planes.height = static_cast<int>(height);
  planes.width = static_cast<int>(width);
  planes.channels = static_cast<int>(channels);
  planes.values.resize(floats);
  for (float& v : planes.values) v = in.f32();
  return planes;
}

void save_coded(const CodedMatrix& coded, const std::filesystem::path& path) {
  ByteWriter out;
  out.bytes("PCD1");
  out.u32(static_cast<std::uint32_t>(coded.rows));
  out.u32(static_cast<std::uint32_t>(coded.cols));
  for (double v : coded.values) out.f32(static_cast<float>(v));
  detail::write_file(path, out.buffer());
}

CodedMatrix load_coded(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string what = "coded file " + path.string();
  ByteReader in(bytes, what);
  expect_magic(in, "PCD1", what);
  const auto rows = in.u32();
  const auto cols = in.u32();
  const std::size_t cells = checked_cells(rows, cols, 1, what);
  expect_payload(in, cells * 4, what);
  CodedMatrix coded{static_cast<int>(rows), static_cast<int>(cols), std::vector<double>(cells)};
  for (double& v : coded.values) v = in.f32();
  return coded;
}

void save_label_pgm(const LabelGrid& grid, const std::filesystem::path& path) {
  if (grid.height <= 0 || grid.width <= 0 ||
      grid.labels.size() != static_cast<std::size_t>(grid.height) * static_cast<std::size_t>(grid.width)) {
    fail(ErrorCode::ShapeError, "label grid does not match its dimensions");
  }
  ByteWriter out;
  out.bytes("P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n");
  for (auto l : grid.labels) out.u8(l);
  detail::write_file(path, out.buffer());
}

LabelGrid load_label_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string what = "label file " + path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') fail(ErrorCode::BadMagic, what + ": not a binary PGM");
  std::size_t pos = 2;
  LabelGrid grid;
  grid.width = pnm_int(bytes, pos, what);
  grid.height = pnm_int(bytes, pos, what);
  const int maxval = pnm_int(bytes, pos, what);
  if (maxval <= 0 || maxval > 255) fail(ErrorCode::InvalidInput, what + ": maxval must be in 1..255");
  ++pos;  // single whitespace byte before the raster
  const std::size_t cells = checked_cells(static_cast<std::uint64_t>(grid.height),
                                          static_cast<std::uint64_t>(grid.width), 1, what);
  if (bytes.size() < pos + cells) {
    fail(ErrorCode::TruncatedPayload, what + ": expected " + std::to_string(pos + cells) + " bytes, file has " +
                                          std::to_string(bytes.size()));
  }
  grid.labels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + cells));
  return grid;
}

const std::vector<Rgb>& default_palette() {
  static const std::vector<Rgb> palette{
      {{230, 25, 75}},  {{60, 180, 75}},   {{0, 130, 200}},   {{255, 225, 25}}, {{245, 130, 48}}, {{145, 30, 180}},
      {{70, 240, 240}}, {{240, 50, 230}},  {{210, 245, 60}},  {{250, 190, 212}}, {{0, 128, 128}},  {{220, 190, 255}},
      {{170, 110, 40}}, {{255, 250, 200}}, {{128, 0, 0}},     {{170, 255, 195}},
  };
  return palette;
}

std::vector<char> render_map(const LabelGrid& grid, const std::vector<Rgb>& palette) {
  if (grid.labels.size() != static_cast<std::size_t>(grid.height) * static_cast<std::size_t>(grid.width)) {
    fail(ErrorCode::ShapeError, "label grid does not match its dimensions");
  }
  ByteWriter out;
  out.bytes("P6\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n");
  for (auto l : grid.labels) {
    Rgb rgb{{0, 0, 0}};
    if (l != kIgnoreLabel) {
      if (l >= palette.size()) {
        fail(ErrorCode::InvalidLabel, "class id " + std::to_string(l) + " has no palette entry");
      }
      rgb = palette[l];
    }
    for (auto ch : rgb) out.u8(ch);
  }
  return out.buffer();
}

void save_map(const LabelGrid& grid, const std::filesystem::path& path, const std::vector<Rgb>& palette) {
  detail::write_file(path, render_map(grid, palette));
}

}  // namespace pcn
