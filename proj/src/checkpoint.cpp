#include "pcn/checkpoint.hpp"

#include <string>

#include "binary.hpp"
#include "pcn/config.hpp"
#include "pcn/error.hpp"

namespace pcn {

namespace {

constexpr std::string_view kMagic = "PCNCKPT1";
constexpr std::string_view kLayerMarker = "\n---\n";

std::string layer_line(const std::string& name, const ConvLayer& l) {
  return "layer " + name + "=conv " + std::to_string(l.kernel_count) + "," + std::to_string(l.in_depth) + "," +
         std::to_string(l.kernel_size) + "," + std::to_string(l.stride) + "," + std::to_string(l.padding.before) +
         "," + std::to_string(l.padding.after) + "\n";
}

}  // namespace

std::vector<char> serialize_model(const PcnModel& model) {
  const auto layers = trainable_layers(model);
  std::string manifest = format_key_values(config_to_key_values(model.config));
  manifest += kLayerMarker;
  for (const auto& [name, layer] : layers) manifest += layer_line(name, *layer);

  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u32(kCheckpointVersion);
  out.u64(model.config.seed);
  out.string(manifest);
  out.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& [name, l] : layers) {
    out.string(name);
    for (int v : {l->kernel_count, l->in_depth, l->kernel_size, l->stride, l->padding.before, l->padding.after})
      out.i32(v);
    for (double w : l->weights) out.f64(w);
    for (double b : l->bias) out.f64(b);
  }
  for (double v : model.normalization.raw_min) out.f64(v);
  for (double v : model.normalization.raw_max) out.f64(v);
  out.f64(model.normalization.coded_scale);
  return out.buffer();
}

PcnModel deserialize_model(const std::vector<char>& bytes) {
  const std::string what = "checkpoint";
  detail::ByteReader in(bytes, what);
  if (in.remaining() < kMagic.size() || in.bytes(kMagic.size()) != kMagic) {
    fail(ErrorCode::BadMagic, what + ": missing 'PCNCKPT1' magic");
  }
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::InvalidInput, what + ": unsupported version " + std::to_string(version));
  }
  const auto seed = in.u64();
  const std::string manifest = in.string();
  const auto marker = manifest.find(kLayerMarker);
  if (marker == std::string::npos) fail(ErrorCode::InvalidInput, what + ": manifest has no layer section");

  PcnConfig config = config_from_key_values(parse_key_values(manifest.substr(0, marker)));
  if (config.seed != seed) fail(ErrorCode::InvalidInput, what + ": header seed disagrees with manifest");
  PcnModel model = build_model(config);

  auto layers = trainable_layers(model);
  const auto count = in.u32();
  if (count != layers.size()) {
    fail(ErrorCode::ShapeError, what + ": " + std::to_string(count) + " layers, architecture has " +
                                    std::to_string(layers.size()));
  }
  for (auto& ref : layers) {
    const std::string name = in.string();
    if (name != ref.name) fail(ErrorCode::ShapeError, what + ": expected layer " + ref.name + ", found " + name);
    ConvLayer& l = *ref.layer;
    for (int expected : {l.kernel_count, l.in_depth, l.kernel_size, l.stride, l.padding.before, l.padding.after}) {
      if (in.i32() != expected) fail(ErrorCode::ShapeError, what + ": layer " + name + " shape mismatch");
    }
    for (double& w : l.weights) w = in.f64();
    for (double& b : l.bias) b = in.f64();
  }
  for (double& v : model.normalization.raw_min) v = in.f64();
  for (double& v : model.normalization.raw_max) v = in.f64();
  model.normalization.coded_scale = in.f64();
  if (in.remaining() != 0) {
    fail(ErrorCode::InvalidInput, what + ": " + std::to_string(in.remaining()) + " trailing bytes");
  }
  return model;
}

void save_model(const PcnModel& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

PcnModel load_model(const std::filesystem::path& path) { return deserialize_model(detail::read_file(path)); }

}  // namespace pcn
