#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kf/pipeline/synthesis.hpp"
#include "kf/scan/scanner.hpp"
#include "kf/triage/triage.hpp"

namespace kf::workspace {

/// Everything a run depends on. Stored as flat `key = value` text
/// (chkforge.toml); each key can be overridden by KF_<KEY> in the
/// environment.
struct RunConfig {
  pipeline::SynthesisConfig synthesis;
  triage::PlausibilityConfig plausibility;
  scan::ScanLimits limits;  // used for the plausibility scans, so enforced
  int refine_iterations = 3;
  std::string provider = "scripted";  // scripted | replay | record | live | record-live
  int faults = 0;                     // scripted provider fault injection
  std::string cassette = "cassettes/run.jsonl";  // relative to the workspace
  std::string endpoint;
  std::string model;
  std::string api_key_env = "KF_API_KEY";
  std::uint64_t seed = 20250101;  // also the triage sample seed

  RunConfig();
};

/// Known keys in canonical order.
const std::vector<std::string> &config_keys();

/// Throws ConfigError on an unknown key or a malformed value.
void set_config_value(RunConfig &config, const std::string &key, const std::string &value);
std::string get_config_value(const RunConfig &config, const std::string &key);

/// Parses `key = value` lines; `#` starts a comment, strings may be quoted.
RunConfig parse_config(const std::string &text);
/// Defaults, then the file (if given), then KF_<KEY> overrides.
RunConfig load_config(const std::optional<std::filesystem::path> &file);
void apply_env_overrides(RunConfig &config);
/// Canonical text; parse_config(config_text(c)) reproduces c.
std::string config_text(const RunConfig &config);

}  // namespace kf::workspace
