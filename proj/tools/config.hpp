#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pct/pipelines.hpp"

namespace pct::app {

using KeyValues = std::map<std::string, std::string>;

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iters;
  bool full_scale = false;
};

struct RunConfig {
  ExperimentSpec spec;
  std::vector<double> n0_list = default_noise_levels();
  bool full_scale = false;

  /// Every key with its effective value; loading this map again yields the
  /// same RunConfig.
  KeyValues resolved() const;
};

/// Keys accepted in a config file, in canonical order.
const std::vector<std::string>& known_keys();

/// INI text with optional sections [geometry], [phantom], [reconstruction],
/// [sweep]; keys may also appear outside any section. Unknown keys, keys in
/// the wrong section and malformed values throw std::invalid_argument naming
/// the key.
KeyValues parse_ini(const std::string& text);

/// Reads an INI file, or the "config" object of a run manifest (.json).
KeyValues read_config_file(const std::filesystem::path& path);

RunConfig build_config(const KeyValues& kv, const Overrides& ov = {});

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const Overrides& ov = {});

}  // namespace pct::app
