#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seg/errors.hpp"

namespace seg {

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "method", "input", "init", "init_rule", "truth", "output", "trace_csv",
      "trace_elapsed", "snapshot_every", "snapshot_dir",
      "edge.sigma", "edge.normalize_input",
      "ictm.tau", "ictm.lambda", "ictm.tol", "ictm.max_iter", "ictm.record_energy",
      "ictm.output", "ictm.trace_csv",
      "drlse.alpha", "drlse.lambda", "drlse.mu", "drlse.dt", "drlse.epsilon", "drlse.c0",
      "drlse.potential", "drlse.tol", "drlse.max_iter", "drlse.output", "drlse.trace_csv",
  };
  return keys;
}

inline std::string strip(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  const std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Key-value run configuration: one "key = value" per line, "#" comments.
/// Unknown keys are rejected up front so typos cannot silently fall back to
/// defaults.
struct RunConfig {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw config_error("missing required config key \"" + key + "\"");
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return parse_double(key, get(key)); }
  double get_double(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    int v = 0;
    const auto res = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (res.ec != std::errc{} || res.ptr != it->second.data() + it->second.size())
      throw config_error("config key \"" + key + "\": cannot parse integer \"" + it->second + "\"");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw config_error("config key \"" + key + "\": expected true or false, got \"" + it->second +
                       "\"");
  }

  void set(const std::string& key, const std::string& value) {
    if (!detail::known_config_keys().count(key))
      throw config_error("unknown config key \"" + key + "\"");
    kv[key] = value;
  }

private:
  static double parse_double(const std::string& key, const std::string& text) {
    double v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
      throw config_error("config key \"" + key + "\": cannot parse number \"" + text + "\"");
    return v;
  }
};

inline RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path.string());
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path.string() + ":" + std::to_string(lineno) +
                         ": expected \"key = value\"");
    const std::string key = detail::strip(line.substr(0, eq));
    const std::string value = detail::strip(line.substr(eq + 1));
    if (key.empty())
      throw config_error(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.has(key))
      throw config_error(path.string() + ":" + std::to_string(lineno) + ": duplicate key \"" +
                         key + "\"");
    try {
      cfg.set(key, value);
    } catch (const config_error& e) {
      throw config_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

/// Applies a command-line "key=value" override; flags beat file values.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("override \"" + assignment + "\" must look like key=value");
  const std::string key = detail::strip(assignment.substr(0, eq));
  const std::string value = detail::strip(assignment.substr(eq + 1));
  if (key.empty()) throw config_error("override \"" + assignment + "\" has an empty key");
  cfg.set(key, value);
}

}  // namespace seg
