#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lfl/runtime.hpp"
#include "lfl/track.hpp"

namespace lfl {

// Flat `key = value` configuration. Later assignments win.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // Parses `key=value`; throws ConfigError when malformed.
  void apply_override(std::string_view assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Canonical text: sorted `key = value` lines.
  std::string serialize() const;
  // 16 hex digits identifying the canonical text.
  std::string fingerprint() const;

 private:
  std::map<std::string, std::string> values_;
};

// Keys understood by the simulator and experiment harness.
const std::vector<std::string>& known_config_keys();
// Throws ConfigError naming the first unrecognized key.
void check_known_keys(const Config& config);

ScenarioConfig scenario_from_config(const Config& config);
Track track_from_config(const Config& config);
// The resolved configuration: every known key with its effective value.
Config resolved_config(const Config& config);

}  // namespace lfl
