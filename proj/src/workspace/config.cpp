#include "kf/workspace/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

namespace kf::workspace {

namespace {

template <typename T>
T parse_number(const std::string &key, const std::string &value) {
  T out{};
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  return out;
}

int parse_count(const std::string &key, const std::string &value, int min) {
  const int v = parse_number<int>(key, value);
  if (v < min) throw ConfigError(key + " must be at least " + std::to_string(min));
  return v;
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::string format_double(double d) {
  std::string s = std::to_string(d);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

RunConfig::RunConfig() {
  limits.enforce = true;
  plausibility.sample_seed = seed;
}

const std::vector<std::string> &config_keys() {
  static const std::vector<std::string> kKeys = {
      "max_iterations", "max_repair_attempts", "t_valid",     "max_nodes",
      "loop_unroll",    "t_plausible",         "sample_size", "max_sample_fp",
      "refine_iterations", "time_limit",       "max_warnings", "jobs",
      "seed",           "provider",            "faults",      "cassette",
      "endpoint",       "model",               "api_key_env"};
  return kKeys;
}

void set_config_value(RunConfig &c, const std::string &key, const std::string &raw) {
  const std::string value = unquote(trim(raw));
  if (key == "max_iterations") {
    c.synthesis.max_iterations = parse_count(key, value, 1);
  } else if (key == "max_repair_attempts") {
    c.synthesis.max_repair_attempts = parse_count(key, value, 1);
  } else if (key == "t_valid") {
    c.synthesis.t_valid = parse_count(key, value, 1);
  } else if (key == "max_nodes") {
    c.synthesis.budget.max_nodes = static_cast<std::size_t>(parse_count(key, value, 1));
    c.limits.budget = c.synthesis.budget;
  } else if (key == "loop_unroll") {
    c.synthesis.budget.loop_unroll = parse_count(key, value, 1);
    c.limits.budget = c.synthesis.budget;
  } else if (key == "t_plausible") {
    c.plausibility.t_plausible = parse_count(key, value, 1);
  } else if (key == "sample_size") {
    c.plausibility.sample_size = parse_count(key, value, 1);
  } else if (key == "max_sample_fp") {
    c.plausibility.max_sample_fp = parse_count(key, value, 0);
  } else if (key == "refine_iterations") {
    c.refine_iterations = parse_count(key, value, 1);
  } else if (key == "time_limit") {
    try {
      std::size_t used = 0;
      c.limits.time_limit = std::stod(value, &used);
      if (used != value.size() || c.limits.time_limit <= 0) throw ConfigError("");
    } catch (const std::exception &) {
      throw ConfigError("invalid value '" + value + "' for time_limit");
    }
  } else if (key == "max_warnings") {
    c.limits.max_warnings = static_cast<std::size_t>(parse_count(key, value, 1));
  } else if (key == "jobs") {
    c.limits.jobs = parse_count(key, value, 1);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
    c.plausibility.sample_seed = c.seed;
  } else if (key == "provider") {
    static const std::vector<std::string> kProviders = {"scripted", "replay", "record", "live",
                                                        "record-live"};
    if (std::find(kProviders.begin(), kProviders.end(), value) == kProviders.end()) {
      throw ConfigError("unknown provider '" + value + "'");
    }
    c.provider = value;
  } else if (key == "faults") {
    c.faults = parse_count(key, value, 0);
  } else if (key == "cassette") {
    c.cassette = value;
  } else if (key == "endpoint") {
    c.endpoint = value;
  } else if (key == "model") {
    c.model = value;
  } else if (key == "api_key_env") {
    c.api_key_env = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string get_config_value(const RunConfig &c, const std::string &key) {
  if (key == "max_iterations") return std::to_string(c.synthesis.max_iterations);
  if (key == "max_repair_attempts") return std::to_string(c.synthesis.max_repair_attempts);
  if (key == "t_valid") return std::to_string(c.synthesis.t_valid);
  if (key == "max_nodes") return std::to_string(c.synthesis.budget.max_nodes);
  if (key == "loop_unroll") return std::to_string(c.synthesis.budget.loop_unroll);
  if (key == "t_plausible") return std::to_string(c.plausibility.t_plausible);
  if (key == "sample_size") return std::to_string(c.plausibility.sample_size);
  if (key == "max_sample_fp") return std::to_string(c.plausibility.max_sample_fp);
  if (key == "refine_iterations") return std::to_string(c.refine_iterations);
  if (key == "time_limit") return format_double(c.limits.time_limit);
  if (key == "max_warnings") return std::to_string(c.limits.max_warnings);
  if (key == "jobs") return std::to_string(c.limits.jobs);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "provider") return c.provider;
  if (key == "faults") return std::to_string(c.faults);
  if (key == "cassette") return c.cassette;
  if (key == "endpoint") return c.endpoint;
  if (key == "model") return c.model;
  if (key == "api_key_env") return c.api_key_env;
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string &text) {
  RunConfig c;
  int n = 0;
  for (const auto &raw : split_lines(text)) {
    ++n;
    std::string line = raw;
    // A '#' inside a quoted value is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(n) + ": expected key = value");
    }
    try {
      set_config_value(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError &e) {
      throw ConfigError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return c;
}

void apply_env_overrides(RunConfig &c) {
  for (const auto &key : config_keys()) {
    std::string name = "KF_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (const char *v = std::getenv(name.c_str())) {
      try {
        set_config_value(c, key, v);
      } catch (const ConfigError &e) {
        throw ConfigError(name + ": " + e.what());
      }
    }
  }
}

RunConfig load_config(const std::optional<std::filesystem::path> &file) {
  RunConfig c;
  if (file) {
    if (!std::filesystem::exists(*file)) throw ConfigError("config file " + file->string() + " not found");
    c = parse_config(read_file(*file));
  }
  apply_env_overrides(c);
  return c;
}

std::string config_text(const RunConfig &c) {
  static const std::vector<std::string> kStrings = {"provider", "cassette", "endpoint", "model",
                                                    "api_key_env"};
  std::string out;
  for (const auto &key : config_keys()) {
    const std::string v = get_config_value(c, key);
    const bool quote = std::find(kStrings.begin(), kStrings.end(), key) != kStrings.end();
    out += key + " = " + (quote ? "\"" + v + "\"" : v) + "\n";
  }
  return out;
}

}  // namespace kf::workspace
