#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "anchorloc/pipeline.h"

namespace anchorloc {

// Options of one localization run. Config files are flat "key value" lines
// (an optional "=" between key and value is accepted) under the io lexical
// rules; unknown or repeated keys are rejected.
struct RunConfig {
  LocalizerOptions localizer;
  uint64_t seed = 0;
  // Worker threads; 0 selects the machine's hardware concurrency.
  int threads = 0;
  std::string report_path = "report.txt";
  // Per-edge table; empty disables it.
  std::string edges_path;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::string default_value;
};

// Every key with its default, in documentation order.
std::vector<ConfigKey> ConfigKeys();

// Sets one key; throws kParseError naming `file` and `line` for unknown keys
// or invalid values.
void SetConfigValue(RunConfig& config, std::string_view key, std::string_view value,
                    const std::string& file = "<config>", int line = 0);
std::string GetConfigValue(const RunConfig& config, std::string_view key);

RunConfig ParseRunConfig(std::string_view content, const std::string& file = "<config>");
RunConfig LoadRunConfig(const std::filesystem::path& path);
// All keys with their current values; parses back to an equal config.
std::string FormatRunConfig(const RunConfig& config);
// "key (default: value)  help" lines for --help.
std::string ConfigHelp();

}  // namespace anchorloc
