#pragma once

// Run configuration: a small key = value text format (with `pi`-suffixed
// angle literals) and a JSON form that round-trips through the manifest,
// both mapping onto ExperimentSpec / SweepSpec.  Unknown keys and
// malformed values are reported with file and line.

#include "qfiflow/experiments.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qfiflow {

struct LoadedConfig {
  ExperimentSpec spec;
  SweepSpec sweep;
  bool has_sweep = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& raw) {
  std::string s = trim(raw);
  double factor = 1.0;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    factor = pi;
    s = trim(s.substr(0, s.size() - 2));
    if (s.empty() || s == "+") s = "1";
    if (s == "-") s = "-1";
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("expected a number, got '" + raw + "'");
  return v * factor;
}

inline long long parse_integer(const std::string& raw) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("expected an integer, got '" + raw + "'");
  return v;
}

inline std::uint64_t parse_seed(const std::string& raw) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || s.find('-') != std::string::npos)
    throw std::invalid_argument("expected a nonnegative integer, got '" + raw + "'");
  return v;
}

inline bool parse_bool(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + raw + "'");
}

inline std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void apply_entry(LoadedConfig& cfg, const std::string& key, const std::string& value) {
  ExperimentSpec& s = cfg.spec;
  if (key == "experiment") s.experiment = static_cast<int>(parse_integer(value));
  else if (key == "system.a_n_mhz" || key == "a_n_mhz") s.sys.a_n_mhz = parse_number(value);
  else if (key == "system.a_c_mhz" || key == "a_c_mhz") s.sys.a_c_mhz = parse_number(value);
  else if (key == "system.phi1" || key == "phi1") s.sys.phi1 = parse_number(value);
  else if (key == "system.phi2" || key == "phi2") s.sys.phi2 = parse_number(value);
  else if (key == "system.varphi1" || key == "varphi1") s.sys.varphi1 = parse_number(value);
  else if (key == "system.varphi2" || key == "varphi2") s.sys.varphi2 = parse_number(value);
  else if (key == "bath.enabled") s.bath.enabled = parse_bool(value);
  else if (key == "bath.t2_star_ns") s.bath.t2_star_ns = parse_number(value);
  else if (key == "bath.alpha") s.bath.alpha = parse_number(value);
  else if (key == "bath.phi0") s.bath.phi0 = parse_number(value);
  else if (key == "bath.a_c0_mhz") s.bath.a_c0_mhz = parse_number(value);
  else if (key == "bath.varphi0") s.bath.varphi0 = parse_number(value);
  else if (key == "grid.start_ns") s.grid.start_ns = parse_number(value);
  else if (key == "grid.end_ns") s.grid.end_ns = parse_number(value);
  else if (key == "grid.dt_ns") s.grid.dt_ns = parse_number(value);
  else if (key == "noise.enabled") s.noise = parse_bool(value);
  else if (key == "noise.shots") s.model.shots = parse_integer(value);
  else if (key == "noise.bright_rate") s.model.bright_rate = parse_number(value);
  else if (key == "noise.dark_rate") s.model.dark_rate = parse_number(value);
  else if (key == "smoothing.window") s.smoothing_window = static_cast<int>(parse_integer(value));
  else if (key == "seed") s.seed = parse_seed(value);
  else if (key == "outputs") s.outputs = split_list(value);
  else if (key == "sweep.parameter") { cfg.sweep.parameter = trim(value); cfg.has_sweep = true; }
  else if (key == "sweep.values") {
    cfg.sweep.values.clear();
    for (const auto& item : split_list(value)) cfg.sweep.values.push_back(parse_number(item));
    cfg.has_sweep = true;
  }
  else if (key == "sweep.horizon_ns") { cfg.sweep.horizon_ns = parse_number(value); cfg.has_sweep = true; }
  else throw std::invalid_argument("unknown key '" + key + "'");
}

inline void flatten_json(const nlohmann::json& j, const std::string& prefix, LoadedConfig& cfg,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const nlohmann::json& v = it.value();
    try {
      if (v.is_object()) {
        flatten_json(v, key, cfg, where);
      } else if (v.is_array()) {
        std::string joined;
        for (const auto& e : v) {
          if (!joined.empty()) joined += ",";
          joined += e.is_string() ? e.get<std::string>() : e.dump();
        }
        apply_entry(cfg, key, joined);
      } else if (v.is_string()) {
        apply_entry(cfg, key, v.get<std::string>());
      } else {
        apply_entry(cfg, key, v.dump());
      }
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument(where + ": " + err.what());
    }
  }
}

}  // namespace detail

// JSON form used in manifests; `noise.enabled` etc. mirror the text keys.
inline nlohmann::ordered_json spec_to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["experiment"] = s.experiment;
  j["system"] = {{"a_n_mhz", s.sys.a_n_mhz}, {"a_c_mhz", s.sys.a_c_mhz}, {"phi1", s.sys.phi1},
                 {"phi2", s.sys.phi2},       {"varphi1", s.sys.varphi1}, {"varphi2", s.sys.varphi2}};
  j["bath"] = {{"enabled", s.bath.enabled}, {"t2_star_ns", s.bath.t2_star_ns}, {"alpha", s.bath.alpha},
               {"phi0", s.bath.phi0},       {"a_c0_mhz", s.bath.a_c0_mhz},     {"varphi0", s.bath.varphi0}};
  j["grid"] = {{"start_ns", s.grid.start_ns}, {"end_ns", s.grid.end_ns}, {"dt_ns", s.grid.dt_ns}};
  j["noise"] = {{"enabled", s.noise},
                {"shots", s.model.shots},
                {"bright_rate", s.model.bright_rate},
                {"dark_rate", s.model.dark_rate}};
  j["smoothing"] = {{"window", s.smoothing_window}};
  j["seed"] = s.seed;
  j["outputs"] = s.outputs;
  return j;
}

// Accepts the key = value format, a bare JSON config object, or a full run
// manifest (the config is read from its "config" member), decided by the
// first non-blank character.
inline LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  LoadedConfig cfg;

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
      throw std::invalid_argument(path.string() + ": " + err.what());
    }
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    detail::flatten_json(j, "", cfg, path.string());
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      try {
        detail::apply_entry(cfg, key, value);
      } catch (const std::invalid_argument& err) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + err.what());
      }
    }
  }
  cfg.sweep.base = cfg.spec;
  return cfg;
}

}  // namespace qfiflow
