#pragma once

// Deterministic CSV/JSON output. Numbers are written in shortest round-trip
// form; nothing time- or host-dependent goes into a payload.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bodyflock/errors.hpp"
#include "bodyflock/gci.hpp"
#include "bodyflock/ibm.hpp"

namespace bodyflock {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << body;
  if (!out) throw IoError(path.string() + ": write failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// Small CSV builder: a header row, then rows of numbers or strings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw IoError("csv: row width does not match header");
    rows_.push_back(cells);
    return *this;
  }
  CsvTable& row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double x : cells) s.push_back(format_double(x));
    return row(s);
  }

  std::string str() const {
    std::string out;
    const auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Minimal CSV reader for files this library writes (no quoting).
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline Json to_json(const Mat3& m) {
  Json a = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
  return a;
}

inline Json to_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline Json to_json(const EquilibriumParams& p) {
  Json j;
  j["d"] = p.d;
  j["nu"] = p.nu.describe();
  return j;
}

/// Snapshot: {"schema_version", "time", "step", "agents": [[[x,y,z],[a11..a33 row-major]], ...]}.
inline Json snapshot_json(const ParticleEnsemble& ens) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["time"] = ens.time;
  j["step"] = ens.step;
  Json agents = Json::array();
  for (std::size_t k = 0; k < ens.size(); ++k) agents.push_back(Json::array({to_json(ens.positions[k]), to_json(ens.attitudes[k])}));
  j["agents"] = std::move(agents);
  return j;
}

/// Checks the documented snapshot shape; throws IoError naming the offending field.
inline void validate_snapshot(const Json& j) {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw IoError("snapshot: " + what);
  };
  need(j.is_object(), "not an object");
  need(j.contains("schema_version") && j["schema_version"] == kSchemaVersion, "schema_version");
  need(j.contains("time") && j["time"].is_number(), "time");
  need(j.contains("step") && j["step"].is_number_integer(), "step");
  need(j.contains("agents") && j["agents"].is_array(), "agents");
  for (const auto& a : j["agents"]) {
    need(a.is_array() && a.size() == 2, "agent entry must be [position, attitude]");
    need(a[0].is_array() && a[0].size() == 3, "position must have 3 entries");
    need(a[1].is_array() && a[1].size() == 9, "attitude must have 9 entries");
    for (const auto& x : a[0]) need(x.is_number(), "position entries must be numbers");
    for (const auto& x : a[1]) need(x.is_number(), "attitude entries must be numbers");
  }
}

inline ParticleEnsemble snapshot_from_json(const Json& j) {
  validate_snapshot(j);
  ParticleEnsemble ens;
  ens.time = j["time"].get<double>();
  ens.step = j["step"].get<std::uint64_t>();
  for (const auto& a : j["agents"]) {
    Vec3 x;
    Mat3 m;
    for (int i = 0; i < 3; ++i) x[i] = a[0][i].get<double>();
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = a[1][i].get<double>();
    ens.positions.push_back(x);
    ens.attitudes.push_back(reproject(m).matrix());
  }
  return ens;
}

inline Json coeffs_json(const CoeffSet& c) {
  Json j = to_json(c.params);
  j["log_Z"] = c.log_Z;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  j["c3"] = c.c3;
  j["c4"] = c.c4;
  j["diagnostics"] = {{"c2_unreduced", c.c2_unreduced},
                      {"c4_unreduced", c.c4_unreduced},
                      {"galerkin_residual", c.galerkin_residual},
                      {"fem_nodes", c.fem_nodes},
                      {"gauss_points", c.gauss_points},
                      {"psi0_min", *std::min_element(c.gci.values().begin(), c.gci.values().end())}};
  return j;
}

/// psi0 profiles as long-form CSV: d, nu, theta, psi0, m, m_hat
/// (m = exp(sigma(1/2 + cos theta)/d), m_hat = m exp(-sigma(3/2)/d)).
inline void append_psi0_rows(CsvTable& t, const GciSolution& sol) {
  const VonMises vm(sol.params());
  const std::string nu = sol.params().nu.describe();
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const double th = sol.theta(i);
    t.row(std::vector<std::string>{format_double(sol.params().d), nu, format_double(th), format_double(sol.values()[i]),
                                   format_double(vm.m(th)), format_double(vm.m_hat(th))});
  }
}

inline CsvTable psi0_table() { return CsvTable({"d", "nu", "theta", "psi0", "m", "m_hat"}); }

/// Loads the profile for params p from a psi0 CSV (as written by the coeffs command).
inline GciSolution load_psi0(const std::filesystem::path& path, const EquilibriumParams& p) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IoError(path.string() + ": empty file");
  const auto column = [&](const std::string& name) {
    const auto it = std::find(rows[0].begin(), rows[0].end(), name);
    if (it == rows[0].end()) throw IoError(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - rows[0].begin());
  };
  const std::size_t cd = column("d"), cn = column("nu"), cv = column("psi0");
  std::vector<double> values;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size()) throw IoError(path.string() + ": line " + std::to_string(r + 1) + " has wrong width");
    try {
      const double d = std::stod(row[cd]);
      if (std::abs(d - p.d) > 1e-12 * std::abs(p.d) || row[cn] != p.nu.describe()) continue;
      values.push_back(std::stod(row[cv]));
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ": line " + std::to_string(r + 1) + " is not numeric");
    }
  }
  if (values.size() < 4) {
    throw IoError(path.string() + ": no profile for d=" + format_double(p.d) + ", nu=" + p.nu.describe());
  }
  return GciSolution(p, std::move(values));
}

}  // namespace bodyflock
