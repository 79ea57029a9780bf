#pragma once

// Run configuration: a sectioned key=value file ([section] / key = value),
// read with Boost.PropertyTree's INI parser. Keys are addressed as
// "section.key"; command-line overrides use the same paths.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bodyflock/errors.hpp"
#include "bodyflock/ibm.hpp"
#include "bodyflock/nu.hpp"

namespace bodyflock {

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse(in, path);
  }

  static RunConfig parse(std::istream& in, const std::string& origin = "<string>") {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("config", origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
      if (body.empty()) {
        throw ConfigError(section, "top-level keys are not allowed; put them in a [section]");
      }
      for (const auto& [key, value] : body) cfg.values_[section + "." + key] = value.data();
    }
    return cfg;
  }

  static RunConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  /// "section.key=value".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must look like section.key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.') {
      throw ConfigError(key, "override key must be section.key");
    }
    values_[key] = trim(assignment.substr(eq + 1));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    try {
      std::size_t pos = 0;
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(s, &pos, 10);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a nonnegative integer, got '" + s + "'");
    }
  }

  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  /// "1", "constant:1", or "poly:a0;a1;..." (nu(mu) = sum a_i mu^i, ',' also
  /// accepted); "zero" for no coordination.
  NuSpec get_nu(const std::string& key, const NuSpec& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string s = it->second;
    try {
      if (s == "zero" || s == "0") return NuSpec::zero();
      if (s.rfind("poly:", 0) == 0) {
        RunConfig tmp;
        std::string body = s.substr(5);
        std::replace(body.begin(), body.end(), ';', ',');
        tmp.values_[key] = body;
        return NuSpec::polynomial(tmp.get_list(key, {}));
      }
      if (s.rfind("constant:", 0) == 0) s = s.substr(9);
      return NuSpec::constant(parse_double(key, s));
    } catch (const DomainError& e) {
      throw ConfigError(key, e.what());
    }
  }

  /// Writes the configuration back as a sectioned file (sorted, deterministic).
  std::string serialize() const {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    for (const auto& [k, v] : values_) {
      const auto dot = k.find('.');
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& [sec, kvs] : sections) {
      if (!first) out << '\n';
      first = false;
      out << '[' << sec << "]\n";
      for (const auto& [k, v] : kvs) out << k << " = " << v << '\n';
    }
    return out.str();
  }

  bool operator==(const RunConfig& o) const { return values_ == o.values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a number, got '" + s + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

inline KernelSpec kernel_from_config(const RunConfig& cfg) {
  const std::string kind = cfg.get_string("ibm.kernel", "global");
  if (kind == "global") return KernelSpec::global();
  if (kind == "tophat") return KernelSpec::tophat(cfg.get_double("ibm.kernel_radius", 0.1));
  if (kind == "gaussian") return KernelSpec::gaussian(cfg.get_double("ibm.kernel_sigma", 0.05));
  throw ConfigError("ibm.kernel", "expected global, tophat or gaussian, got '" + kind + "'");
}

inline IbmParams ibm_params_from_config(const RunConfig& cfg) {
  IbmParams p;
  p.n_agents = cfg.get_u64("ibm.n_agents", p.n_agents);
  p.box_length = cfg.get_double("ibm.box_length", p.box_length);
  p.v0 = cfg.get_double("ibm.v0", p.v0);
  p.nu = cfg.get_nu("ibm.nu", p.nu);
  p.D = cfg.get_double("ibm.D", p.D);
  p.dt = cfg.get_double("ibm.dt", p.dt);
  p.seed = cfg.get_u64("run.seed", p.seed);
  p.kernel = kernel_from_config(cfg);
  const std::string fb = cfg.get_string("ibm.det_fallback", "skip_drift");
  if (fb == "skip_drift") p.det_fallback = DetFallback::skip_drift;
  else if (fb == "keep_previous") p.det_fallback = DetFallback::keep_previous;
  else throw ConfigError("ibm.det_fallback", "expected skip_drift or keep_previous, got '" + fb + "'");
  const std::string tg = cfg.get_string("ibm.target", "polar");
  if (tg == "polar") p.target = TargetMode::polar;
  else if (tg == "matrix-mean" || tg == "matrix_mean") p.target = TargetMode::matrix_mean;
  else throw ConfigError("ibm.target", "expected polar or matrix-mean, got '" + tg + "'");
  p.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, cfg.get_u64("run.threads", 1)));
  p.validate();
  return p;
}

}  // namespace bodyflock
