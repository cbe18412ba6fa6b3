// Key=value config files, run manifests, and the tool version string.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace c2s {

std::string version_string();

// Round-trip-safe decimal form of a double ("%.17g"); std::to_string flattens
// small magnitudes to 0.000000.
std::string format_g(double v);

using KvMap = std::map<std::string, std::string>;

// Lines of `key = value`; blank lines and lines starting with '#' ignored;
// inline `# comment` stripped; keys and values trimmed.
KvMap parse_config_text(const std::string& text);
KvMap parse_config_file(const std::string& path);

// Throws ConfigError naming the first key not in `known`.
void require_known_keys(const KvMap& kv, const std::vector<std::string>& known);

// Typed lookups with defaults; throw ConfigError on unparseable values.
std::string kv_get(const KvMap& kv, const std::string& key, const std::string& fallback);
double kv_get_double(const KvMap& kv, const std::string& key, double fallback);
int64_t kv_get_int(const KvMap& kv, const std::string& key, int64_t fallback);
uint64_t kv_get_uint(const KvMap& kv, const std::string& key, uint64_t fallback);
bool kv_get_bool(const KvMap& kv, const std::string& key, bool fallback);

// Comma-separated integer list, e.g. "1,2,4,8,16,32".
std::vector<int> parse_int_list(const std::string& s);

struct RunManifest {
  std::string subcommand;
  KvMap resolved_config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  std::string tool_version;
  std::string started_utc;
  double wall_clock_s = 0.0;
};

// Written beside every artifact as <artifact>.manifest.json.
void write_manifest(const RunManifest& m, const std::string& path);
std::string manifest_path_for(const std::string& artifact_path);

}  // namespace c2s
