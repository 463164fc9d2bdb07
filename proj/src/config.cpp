#include "pcn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcn/error.hpp"

namespace pcn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::ConfigError, "bad value for " + key + ": '" + value + "'");
  return out;
}

ConvSpec parse_conv_spec(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 5) {
    fail(ErrorCode::ConfigError, key + " expects kernels,kernel_size,stride,pad_before,pad_after");
  }
  return {parse_number<int>(key, parts[0]), parse_number<int>(key, parts[1]), parse_number<int>(key, parts[2]),
          {parse_number<int>(key, parts[3]), parse_number<int>(key, parts[4])}};
}

std::string format_conv_spec(const ConvSpec& s) {
  return std::to_string(s.kernels) + "," + std::to_string(s.kernel_size) + "," + std::to_string(s.stride) + "," +
         std::to_string(s.padding.before) + "," + std::to_string(s.padding.after);
}

PcnConfig preset(const std::string& name) {
  if (name == "desk") return PcnConfig::desk_preset();
  if (name == "paper_width") return PcnConfig::paper_width_preset();
  if (name == "paper_front") return PcnConfig::paper_front_preset();
  fail(ErrorCode::ConfigError, "unknown preset '" + name + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected key=value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) fail(ErrorCode::ConfigError, "line " + std::to_string(number) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

void apply_config_value(PcnConfig& c, const std::string& key, const std::string& value) {
  if (key == "num_classes") {
    c.num_classes = parse_number<int>(key, value);
  } else if (key == "feature_maps") {
    c.feature_maps = parse_number<int>(key, value);
  } else if (key == "front0") {
    c.front_net[0] = parse_conv_spec(key, value);
  } else if (key == "front1") {
    c.front_net[1] = parse_conv_spec(key, value);
  } else if (key == "fcn_widths") {
    const auto parts = split(value, ',');
    if (parts.size() != 5) fail(ErrorCode::ConfigError, "fcn_widths expects five comma separated widths");
    for (std::size_t i = 0; i < 5; ++i) c.fcn_widths[i] = parse_number<int>(key, parts[i]);
  } else if (key == "fcn_kernel") {
    c.fcn_kernel = parse_number<int>(key, value);
  } else if (key == "pool_window") {
    c.pool_window = parse_number<int>(key, value);
  } else if (key == "pathways") {
    if (value == "dual") c.pathways = Pathways::Dual;
    else if (value == "coded") c.pathways = Pathways::CodedOnly;
    else if (value == "raw") c.pathways = Pathways::RawOnly;
    else fail(ErrorCode::ConfigError, "pathways must be dual, coded or raw");
  } else if (key == "max_epochs" || key == "epochs") {
    c.max_epochs = parse_number<int>(key, value);
  } else if (key == "plateau_window") {
    c.plateau_window = parse_number<int>(key, value);
  } else if (key == "plateau_tolerance") {
    c.plateau_tolerance = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "learning_rate") {
    c.learning_rate = parse_number<double>(key, value);
  } else if (key == "momentum") {
    c.momentum = parse_number<double>(key, value);
  } else if (key == "lr_decay") {
    c.lr_decay = parse_number<double>(key, value);
  } else if (key == "loss_reduction") {
    if (value == "mean") c.loss_reduction = LossReduction::Mean;
    else if (value == "sum") c.loss_reduction = LossReduction::Sum;
    else fail(ErrorCode::ConfigError, "loss_reduction must be mean or sum");
  } else if (key == "per_class") {
    c.per_class = parse_number<int>(key, value);
  } else if (key == "window") {
    c.window = parse_number<int>(key, value);
  } else {
    fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
}

PcnConfig config_from_key_values(const KeyValues& values, const PcnConfig& base) {
  PcnConfig config = base;
  for (const auto& [k, v] : values)
    if (k == "preset") config = preset(v);
  for (const auto& [k, v] : values)
    if (k != "preset") apply_config_value(config, k, v);
  config.validate();
  return config;
}

KeyValues config_to_key_values(const PcnConfig& c) {
  const char* pathways = c.pathways == Pathways::Dual ? "dual" : c.pathways == Pathways::CodedOnly ? "coded" : "raw";
  std::string widths;
  for (std::size_t i = 0; i < 5; ++i) widths += (i ? "," : "") + std::to_string(c.fcn_widths[i]);
  return {
      {"num_classes", std::to_string(c.num_classes)},
      {"feature_maps", std::to_string(c.feature_maps)},
      {"front0", format_conv_spec(c.front_net[0])},
      {"front1", format_conv_spec(c.front_net[1])},
      {"fcn_widths", widths},
      {"fcn_kernel", std::to_string(c.fcn_kernel)},
      {"pool_window", std::to_string(c.pool_window)},
      {"pathways", pathways},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"plateau_window", std::to_string(c.plateau_window)},
      {"plateau_tolerance", format_double(c.plateau_tolerance)},
      {"seed", std::to_string(c.seed)},
      {"learning_rate", format_double(c.learning_rate)},
      {"momentum", format_double(c.momentum)},
      {"lr_decay", format_double(c.lr_decay)},
      {"loss_reduction", c.loss_reduction == LossReduction::Mean ? "mean" : "sum"},
      {"per_class", std::to_string(c.per_class)},
      {"window", std::to_string(c.window)},
  };
}

}  // namespace pcn
