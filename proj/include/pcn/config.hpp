#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcn/network.hpp"

namespace pcn {

/// Ordered key=value pairs. Later entries override earlier ones.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// One `key = value` per line; blank lines and `#` comments are skipped.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_value_file(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& values);

/// Applies one setting. Unknown keys and malformed values raise ConfigError.
void apply_config_value(PcnConfig& config, const std::string& key, const std::string& value);

/// Starts from `preset=` (desk, paper_width, paper_front) when given,
/// otherwise from `base`, then applies every other key in order.
PcnConfig config_from_key_values(const KeyValues& values, const PcnConfig& base = {});
KeyValues config_to_key_values(const PcnConfig& config);

std::string format_double(double value);

}  // namespace pcn
