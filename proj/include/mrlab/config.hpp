#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrlab/harness.hpp"

namespace mrlab {

/// A documented config key.
struct KeySpec {
  std::string name;
  std::string type;
  std::string default_value;
  std::string doc;
};

/// Every accepted key, in help order.
const std::vector<KeySpec>& config_schema();

/// One line per key: "  name  <type>  (default: value)" followed by the doc text.
std::string config_help();

/// Parses flat "key = value" text; '#' starts a comment. Unknown or repeated
/// keys and malformed values raise ConfigError naming origin and line.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its value in canonical text form.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& config);

}  // namespace mrlab
