// bodyflock: command-line front end.
//
//   bodyflock coeffs   | sample | ibm | pde | validate
//   common flags: --config PATH --seed U64 --out DIR --threads N --format {csv,json} --set section.key=value
//
// Exit codes: 0 ok, 2 configuration/input error, 3 validation failure, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bodyflock/acceptance.hpp"
#include "bodyflock/config.hpp"
#include "bodyflock/io.hpp"
#include "bodyflock/stats.hpp"

namespace fs = std::filesystem;
using namespace bodyflock;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = 0;
  std::string format = "csv";
  std::vector<std::string> sets;
};

RunConfig load_config(const Common& c, CLI::App* sub) {
  RunConfig cfg = c.config.empty() ? RunConfig() : RunConfig::from_file(c.config);
  for (const auto& s : c.sets) cfg.apply_override(s);
  if (sub->count("--seed")) cfg.set("run.seed", std::to_string(c.seed));
  if (sub->count("--threads")) cfg.set("run.threads", std::to_string(c.threads));
  if (c.format != "csv" && c.format != "json") throw ConfigError("--format", "expected csv or json");
  return cfg;
}

unsigned threads_of(const RunConfig& cfg) {
  return static_cast<unsigned>(std::max<std::uint64_t>(1, cfg.get_u64("run.threads", 1)));
}

EquilibriumParams model_params(const RunConfig& cfg, double d) {
  EquilibriumParams p;
  p.d = d;
  p.nu = cfg.get_nu("model.nu", NuSpec::constant(1.0));
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("model.d", "must be positive");
  return p;
}

/// Tabular output in the selected format: name.csv or name.json (array of rows).
void write_table(const fs::path& out, const std::string& name, const std::string& format,
                 const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  if (format == "csv") {
    CsvTable t(header);
    for (const auto& r : rows) t.row(r);
    write_text(out / (name + ".csv"), t.str());
    return;
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json o;
    for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  write_json(out / (name + ".json"), j);
}

// ---------------------------------------------------------------- coeffs

int cmd_coeffs(const RunConfig& cfg, const Common& c) {
  const auto ds = cfg.get_list("coeffs.d_grid", {0.1, 1.0, 10.0});
  for (double d : ds) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("coeffs.d_grid", "every d must be positive");
  }
  std::vector<NuSpec> nus;
  {
    std::istringstream ss(cfg.get_string("coeffs.nu", "1"));
    std::string tok;
    while (ss >> tok) {
      RunConfig one;
      one.set("coeffs.nu", tok);
      nus.push_back(one.get_nu("coeffs.nu", NuSpec::constant(1.0)));
    }
    if (nus.empty()) throw ConfigError("coeffs.nu", "empty list");
  }
  const auto nodes = cfg.get_u64("coeffs.fem_nodes", kDefaultGciNodes);
  const auto gauss = cfg.get_u64("coeffs.gauss_points", 4);
  if (nodes < 64) throw ConfigError("coeffs.fem_nodes", "need at least 64 nodes");
  if (gauss < 1 || gauss > 64) throw ConfigError("coeffs.gauss_points", "must be in [1, 64]");

  Json rows = Json::array();
  CsvTable psi = psi0_table();
  std::vector<std::vector<double>> table;
  for (const auto& nu : nus) {
    if (nu.is_zero()) throw ConfigError("coeffs.nu", "coefficients need nu > 0");
    for (double d : ds) {
      EquilibriumParams p;
      p.d = d;
      p.nu = nu;
      const CoeffSet cs = coefficients(p, solve_psi0(p, nodes), gauss);
      rows.push_back(coeffs_json(cs));
      append_psi0_rows(psi, cs.gci);
      table.push_back({d, cs.c1, cs.c2, cs.c3, cs.c4, cs.log_Z});
      std::printf("d=%-10g nu=%-14s c1=%.10f c2=%.10f c3=%.10f c4=%.10f\n", d, nu.describe().c_str(), cs.c1, cs.c2,
                  cs.c3, cs.c4);
    }
  }
  const fs::path out(c.out);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["rows"] = std::move(rows);
  write_json(out / "coeffs.json", j);
  write_text(out / "psi0.csv", psi.str());
  if (c.format == "csv") write_table(out, "coeffs", "csv", {"d", "c1", "c2", "c3", "c4", "log_Z"}, table);
  return 0;
}

// ---------------------------------------------------------------- sample

int cmd_sample(const RunConfig& cfg, const Common& c) {
  const EquilibriumParams p = model_params(cfg, cfg.get_double("model.d", 0.5));
  const auto n = cfg.get_u64("sample.n", 100000);
  const auto bins = cfg.get_u64("sample.bins", 50);
  if (n == 0) throw ConfigError("sample.n", "must be positive");
  if (bins == 0) throw ConfigError("sample.bins", "must be positive");
  const std::string mode = cfg.get_string("sample.sampler", "inverse_cdf");
  SamplerMode sm;
  if (mode == "inverse_cdf") sm = SamplerMode::inverse_cdf;
  else if (mode == "rejection") sm = SamplerMode::rejection;
  else throw ConfigError("sample.sampler", "expected inverse_cdf or rejection");
  if (p.nu.is_zero()) throw ConfigError("model.nu", "sampling needs nu > 0");

  const VonMises vm(p);
  const VonMisesSampler sampler(vm, sm);
  Rng g(cfg.get_u64("run.seed", 1));
  std::vector<double> angles(n);
  for (auto& t : angles) t = sampler.sample_theta(g);
  const auto hist = theta_histogram(angles, bins);
  const double h = kPi / static_cast<double>(bins);
  std::vector<std::vector<double>> rows;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = h * b, hi = h * (b + 1);
    rows.push_back({lo, hi, hist[b], hist[b] / (static_cast<double>(n) * h), sampler.table().mass(lo, hi) / h});
  }
  write_table(c.out, "histogram", c.format, {"theta_lo", "theta_hi", "count", "density", "expected_density"}, rows);
  std::printf("%llu draws, %llu bins, d=%g\n", static_cast<unsigned long long>(n), static_cast<unsigned long long>(bins), p.d);
  return 0;
}

// ---------------------------------------------------------------- ibm

int cmd_ibm(const RunConfig& cfg, const Common& c) {
  const IbmParams p = ibm_params_from_config(cfg);
  const double t_end = cfg.get_double("run.t_end", 1.0);
  if (!(t_end >= 0.0)) throw ConfigError("run.t_end", "must be nonnegative");
  const fs::path out(c.out);
  const std::string init = cfg.get_string("ibm.init", "aligned");
  ParticleEnsemble ens;
  if (init == "aligned") ens = initial_ensemble(p, InitKind::aligned);
  else if (init == "haar") ens = initial_ensemble(p, InitKind::haar);
  else if (init == "file") {
    if (!cfg.has("ibm.init_file")) throw ConfigError("ibm.init_file", "required when ibm.init = file");
    const std::string path = cfg.get_string("ibm.init_file", "");
    if (!fs::exists(path)) throw ConfigError("ibm.init_file", "no such file '" + path + "'");
    ens = snapshot_from_json(read_json(path));
    if (ens.size() != p.n_agents) throw ConfigError("ibm.n_agents", "does not match the initial snapshot");
  } else {
    throw ConfigError("ibm.init", "expected aligned, haar or file");
  }

  IbmSimulator sim(p);
  RunOptions opt;
  opt.t_end = t_end;
  opt.sample_every = cfg.get_u64("run.sample_every", 1);
  opt.snapshot_every = cfg.get_u64("run.snapshot_every", 0);
  std::vector<std::string> written;
  opt.on_snapshot = [&](const ParticleEnsemble& e) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%08llu.json", static_cast<unsigned long long>(e.step));
    write_json(out / "snapshots" / name, snapshot_json(e));
    written.push_back(name);
  };
  const auto series = run(sim, ens, opt);
  std::vector<std::vector<double>> rows;
  for (const auto& s : series) {
    rows.push_back({s.t, s.c1_hat, s.omega[0], s.omega[1], s.omega[2], static_cast<double>(s.det_fallbacks),
                    s.disordered ? 1.0 : 0.0});
  }
  write_table(out, "timeseries", c.format, {"t", "c1_hat", "omega_x", "omega_y", "omega_z", "det_fallbacks", "disordered"},
              rows);
  write_text(out / "config.ini", cfg.serialize());
  std::printf("%zu agents, %llu steps, final c1_hat=%.6f, %zu snapshots\n", ens.size(),
              static_cast<unsigned long long>(ens.step), series.back().c1_hat, written.size());
  return 0;
}

// ---------------------------------------------------------------- pde

int cmd_pde(const RunConfig& cfg, const Common& c) {
  const auto shape_list = cfg.get_list("pde.shape", {64, 1, 1});
  if (shape_list.size() != 3) throw ConfigError("pde.shape", "expected three sizes");
  std::array<std::size_t, 3> shape{};
  for (int a = 0; a < 3; ++a) {
    if (!(shape_list[a] >= 1.0) || shape_list[a] != std::floor(shape_list[a])) throw ConfigError("pde.shape", "sizes must be positive integers");
    shape[a] = static_cast<std::size_t>(shape_list[a]);
  }
  const double dx = cfg.get_double("pde.dx", 1.0 / static_cast<double>(shape[0]));
  if (!(dx > 0.0)) throw ConfigError("pde.dx", "must be positive");

  SohbParams p;
  const bool given = cfg.has("pde.c1") || cfg.has("pde.c2") || cfg.has("pde.c3") || cfg.has("pde.c4");
  if (given) {
    p.coeffs = {cfg.get_double("pde.c1", 0.0), cfg.get_double("pde.c2", 0.0), cfg.get_double("pde.c3", 0.0),
                cfg.get_double("pde.c4", 0.0)};
  } else {
    p.coeffs = PdeCoefficients::from(compute_coefficients(model_params(cfg, cfg.get_double("model.d", 0.5))));
  }
  p.cfl = cfg.get_double("pde.cfl", 0.4);
  if (!(p.cfl > 0.0 && p.cfl <= 1.0)) throw ConfigError("pde.cfl", "must be in (0, 1]");
  p.dt = cfg.get_double("pde.dt", 0.0);
  if (p.dt < 0.0) throw ConfigError("pde.dt", "must be nonnegative");
  p.rho_floor_factor = cfg.get_double("pde.rho_floor_factor", 1e-8);
  const std::string ro = cfg.get_string("pde.reortho", "polar");
  if (ro == "polar") p.reortho = Orthonormalization::polar;
  else if (ro == "gram_schmidt") p.reortho = Orthonormalization::gram_schmidt;
  else throw ConfigError("pde.reortho", "expected polar or gram_schmidt");
  p.threads = threads_of(cfg);

  // initial condition
  const std::string init = cfg.get_string("pde.init", "pulse");
  const double amp = cfg.get_double("pde.amplitude", 0.1);
  const double two_pi = 2.0 * kPi;
  const double len = dx * static_cast<double>(shape[0]);
  std::function<Vec3(const Vec3&)> b = [](const Vec3&) { return Vec3::Zero().eval(); };
  std::function<double(const Vec3&)> rho = [](const Vec3&) { return 1.0; };
  if (init == "uniform") {
  } else if (init == "pulse") {
    rho = [=](const Vec3& x) { const double z = (x[0] - 0.3 * len) / (0.05 * len); return 1.0 + amp * std::exp(-z * z); };
  } else if (init == "sine") {
    rho = [=](const Vec3& x) { return 1.0 + amp * std::sin(two_pi * x[0] / len); };
  } else if (init == "rotation") {
    b = [=](const Vec3& x) { return Vec3(two_pi * amp * x[0] / len, 0, 0); };
  } else if (init == "tilt") {
    b = [=](const Vec3& x) { const double z = (x[0] - 0.3 * len) / (0.05 * len); return Vec3(0, 0, amp * std::exp(-z * z)); };
  } else {
    throw ConfigError("pde.init", "expected uniform, pulse, sine, rotation or tilt");
  }
  FrameField f = frame_from_log(shape, dx, b, Rotation(), rho);

  const double dt = p.dt > 0.0 ? p.dt : cfl_step(f, p);
  if (cfg.has("pde.steps")) {
    if (cfg.has("pde.t_end")) throw ConfigError("pde.steps", "give either pde.steps or pde.t_end");
    p.t_end = dt * static_cast<double>(cfg.get_u64("pde.steps", 0));
  } else {
    p.t_end = cfg.get_double("pde.t_end", 0.1);
  }
  if (!(p.t_end >= 0.0)) throw ConfigError("pde.t_end", "must be nonnegative");

  const fs::path out(c.out);
  PdeRunOptions opt;
  opt.sample_every = cfg.get_u64("pde.sample_every", 1);
  const auto samples = sohb_run(f, p, opt);
  std::vector<std::vector<double>> rows;
  for (const auto& s : samples) rows.push_back({s.t, s.mass, s.orthonormality_defect, s.min_rho, static_cast<double>(s.vacuum_cells)});
  write_table(out, "pde_timeseries", c.format, {"t", "mass", "orthonormality_defect", "min_rho", "vacuum_cells"}, rows);

  std::vector<std::vector<double>> field;
  for (std::size_t cell = 0; cell < f.size(); ++cell) {
    const Vec3 x = f.position(cell);
    const Mat3& fr = f.frames()[cell];
    field.push_back({x[0], x[1], x[2], f.rho()[cell], fr(0, 0), fr(1, 0), fr(2, 0), fr(0, 1), fr(1, 1), fr(2, 1), fr(0, 2),
                     fr(1, 2), fr(2, 2)});
  }
  write_table(out, "pde_field", c.format,
              {"x", "y", "z", "rho", "omega_x", "omega_y", "omega_z", "u_x", "u_y", "u_z", "v_x", "v_y", "v_z"}, field);

  Json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["shape"] = {shape[0], shape[1], shape[2]};
  meta["dx"] = dx;
  meta["dt"] = dt;
  meta["t_end"] = p.t_end;
  meta["init"] = init;
  meta["coefficients"] = {{"c1", p.coeffs.c1}, {"c2", p.coeffs.c2}, {"c3", p.coeffs.c3}, {"c4", p.coeffs.c4}};
  meta["mass_drift"] = samples.back().mass - samples.front().mass;
  write_json(out / "pde_meta.json", meta);
  std::printf("%zu cells, t_end=%g, mass drift %.3e, defect %.3e\n", f.size(), p.t_end, samples.back().mass - samples.front().mass,
              samples.back().orthonormality_defect);
  return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const RunConfig& cfg, const Common& c, const std::vector<int>& only, const std::string& psi0_cache) {
  acceptance::SuiteOptions opt;
  opt.seed = cfg.get_u64("validate.seed", opt.seed);
  opt.threads = threads_of(cfg);
  for (int id : only) {
    if (id < 1 || id > acceptance::kCheckCount) throw ConfigError("--only", "check ids are 1.." + std::to_string(acceptance::kCheckCount));
    opt.only.insert(id);
  }
  if (!psi0_cache.empty()) {
    if (!fs::exists(psi0_cache)) throw ConfigError("--psi0-cache", "no such file '" + psi0_cache + "'");
    EquilibriumParams p;
    p.d = 0.5;
    opt.psi0 = load_psi0(psi0_cache, p);
  }
  opt.on_result = [](const acceptance::CheckResult& r) {
    std::printf("%s\n", acceptance::summary_line(r).c_str());
    std::fflush(stdout);
  };
  const auto results = acceptance::run_suite(opt);
  const Json report = acceptance::report_json(results);
  write_json(fs::path(c.out) / "validation.json", report);
  if (c.format == "csv") {
    CsvTable t({"id", "name", "passed"});
    for (const auto& r : results) t.row(std::vector<std::string>{std::to_string(r.id), r.name, r.passed ? "1" : "0"});
    write_text(fs::path(c.out) / "validation.csv", t.str());
  }
  return report["passed"].get<bool>() ? 0 : kExitValidation;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "configuration file (sectioned key = value)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--format", c.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--set", c.sets, "override, section.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body-attitude flocking: coefficients, sampling, particle and macroscopic simulation"};
  app.require_subcommand(1);
  Common common;
  std::vector<int> only;
  std::string psi0_cache;
  CLI::App* coeffs = app.add_subcommand("coeffs", "tabulate c1..c4 and write psi0 profiles");
  CLI::App* sample = app.add_subcommand("sample", "sample the equilibrium and histogram theta");
  CLI::App* ibm = app.add_subcommand("ibm", "run the particle simulator");
  CLI::App* pde = app.add_subcommand("pde", "run the macroscopic solver");
  CLI::App* validate = app.add_subcommand("validate", "run the acceptance checks");
  for (auto* s : {coeffs, sample, ibm, pde, validate}) add_common(s, common);
  validate->add_option("--only", only, "run only these check ids")->delimiter(',');
  validate->add_option("--psi0-cache", psi0_cache, "psi0 CSV (as written by coeffs) used for the GCI check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const RunConfig cfg = load_config(common, sub);
    if (sub == coeffs) return cmd_coeffs(cfg, common);
    if (sub == sample) return cmd_sample(cfg, common);
    if (sub == ibm) return cmd_ibm(cfg, common);
    if (sub == pde) return cmd_pde(cfg, common);
    return cmd_validate(cfg, common, only, psi0_cache);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
