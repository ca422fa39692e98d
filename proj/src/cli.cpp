#include "coldplasma/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "coldplasma/blowup.hpp"
#include "coldplasma/conserved.hpp"
#include "coldplasma/floquet.hpp"
#include "coldplasma/io.hpp"
#include "coldplasma/ode_core.hpp"

namespace coldplasma::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  double rtol = 1e-10;
  double atol = 1e-10;
  std::string out;
  std::string plot_script;
  int jobs = 0;

  IntegratorConfig config() const {
    IntegratorConfig c;
    c.rtol = rtol;
    c.atol = atol;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--rtol/--atol: ") + e.what());
    }
    return c;
  }
};

void add_tolerances(CLI::App* sub, Common& c) {
  sub->add_option("--rtol", c.rtol, "relative tolerance")->capture_default_str();
  sub->add_option("--atol", c.atol, "absolute tolerance")->capture_default_str();
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(parse_double(item));
    } catch (const std::exception&) {
      throw UsageError("--grid: '" + item + "' is not a number (expected start:stop:step)");
    }
  }
  if (parts.size() != 3) throw UsageError("--grid: expected start:stop:step, got '" + spec + "'");
  try {
    return make_grid(parts[0], parts[1], parts[2]);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

// Writes to the file named by `path`, or to `out` when the path is empty.
template <typename F>
void emit(const std::string& path, std::ostream& out, F write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(f);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string system;
  std::vector<double> init;
  std::optional<double> eps;
  std::optional<double> t_max;
  std::optional<int> periods;
  double dt = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  NonlinearSystem sys;
  try {
    sys = parse_nonlinear_system(a.system);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--system: ") + e.what());
  }
  Eigen::VectorXd y0;
  if (a.eps) {
    if (!a.init.empty()) throw UsageError("--eps and --init are mutually exclusive");
    if (sys != NonlinearSystem::axisym2) throw UsageError("--eps: only valid with --system axisym2");
    y0 = Eigen::Vector2d(0, *a.eps);
  } else {
    if (a.init.empty()) throw UsageError("--init: initial state required");
    y0 = Eigen::Map<const Eigen::VectorXd>(a.init.data(), static_cast<Eigen::Index>(a.init.size()));
  }
  if (y0.size() != dimension(sys))
    throw UsageError("--init: " + std::string(to_string(sys)) + " needs " + std::to_string(dimension(sys)) +
                     " components, got " + std::to_string(y0.size()));
  if (!y0.allFinite()) throw UsageError("--init: components must be finite");

  const IntegratorConfig cfg = a.common.config();
  double t_end = 0;
  if (a.periods) {
    if (a.t_max) throw UsageError("--periods and --t-max are mutually exclusive");
    if (*a.periods < 1) throw UsageError("--periods: must be >= 1");
    if (sys != NonlinearSystem::axisym2 || y0(0) != 0)
      throw UsageError("--periods: needs --system axisym2 with a(0) = 0");
    try {
      t_end = *a.periods * period_event(y0(1), cfg);
    } catch (const InvalidAmplitude& e) {
      throw UsageError(std::string("--init: ") + e.what());
    }
  } else {
    if (!a.t_max) throw UsageError("--t-max: required (or --periods for axisym2)");
    t_end = *a.t_max;
  }
  if (!(t_end > 0)) throw UsageError("--t-max: must be positive");
  if (a.dt < 0) throw UsageError("--dt: must be positive");

  IntegratorConfig c = cfg;
  c.record_steps = true;
  auto tr = integrate<double>(nonlinear_rhs(sys), y0, 0.0, t_end, c);
  const CsvTable table = a.dt > 0 ? trajectory_table(sys, tr, a.dt) : trajectory_table(sys, tr);
  emit(a.common.out, out, [&](std::ostream& os) { write_csv(os, table); });
  if (!a.common.plot_script.empty())
    write_text(a.common.plot_script, plot_script_trajectory(a.common.out.empty() ? "-" : a.common.out, sys));
  if (!tr.completed()) {
    err << "simulate: integration stopped at t = " << format_double(tr.last_time()) << " ("
        << to_string(tr.status) << ")\n";
    return kFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct PeriodArgs {
  Common common;
  std::optional<double> eps;
  std::string grid;
};

int cmd_period(const PeriodArgs& a, std::ostream& out, std::ostream&) {
  if (a.eps.has_value() == !a.grid.empty()) throw UsageError("period: give exactly one of --eps or --grid");
  const std::vector<double> eps = a.eps ? std::vector<double>{*a.eps} : parse_grid(a.grid);
  for (double e : eps) {
    try {
      check_amplitude(e);
    } catch (const InvalidAmplitude& ex) {
      throw UsageError(std::string(a.eps ? "--eps: " : "--grid: ") + ex.what());
    }
  }
  const IntegratorConfig cfg = a.common.config();
  std::vector<PeriodResult> rows;
  for (double e : eps) rows.push_back(period_all(e, cfg));
  emit(a.common.out, out, [&](std::ostream& os) { write_csv(os, period_table(rows)); });
  return kOk;
}

// ---------------------------------------------------------------------------

struct ScanArgs {
  Common common;
  std::string system;
  std::string grid;
  std::optional<double> eps;
};

int cmd_floquet_scan(const ScanArgs& a, std::ostream& out, std::ostream& err) {
  VariationalSystem sys;
  try {
    sys = parse_variational_system(a.system);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--system: ") + e.what());
  }
  if (a.eps.has_value() == !a.grid.empty()) throw UsageError("floquet-scan: give exactly one of --eps or --grid");
  const std::vector<double> grid = a.eps ? std::vector<double>{*a.eps} : parse_grid(a.grid);
  if (grid.empty()) throw UsageError("--grid: empty grid");
  for (double g : grid)
    if (!(g > 0 && g < 0.5)) throw UsageError("--grid: A_star values must lie in (0, 1/2), got " + format_double(g));
  if (a.common.jobs < 0) throw UsageError("--jobs: must be >= 0");

  const auto rows = scan(sys, grid, a.common.config(), a.common.jobs);
  const int n = dimension(sys);
  emit(a.common.out, out, [&](std::ostream& os) { write_csv(os, scan_table(rows, n)); });
  if (!a.common.plot_script.empty())
    write_text(a.common.plot_script, plot_script_scan(a.common.out.empty() ? "-" : a.common.out, sys, n));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += !r.ok();
  if (failed) err << "floquet-scan: " << failed << " of " << rows.size() << " rows failed (see error column)\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct BlowupArgs {
  Common common;
  std::string system = "radial5";
  std::vector<double> init;
  std::optional<double> t_max;
  std::optional<double> bz0;
  std::string bz0_grid;
  std::string series;
};

int cmd_blowup(const BlowupArgs& a, std::ostream& out, std::ostream&) {
  NonlinearSystem sys;
  try {
    sys = parse_nonlinear_system(a.system);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--system: ") + e.what());
  }
  if (!a.t_max) throw UsageError("--t-max: required");
  if (!(*a.t_max > 0)) throw UsageError("--t-max: must be positive, got " + format_double(*a.t_max));
  if (a.init.empty()) throw UsageError("--init: initial state required");
  Eigen::VectorXd y0 = Eigen::Map<const Eigen::VectorXd>(a.init.data(), static_cast<Eigen::Index>(a.init.size()));
  // a probe takes (a, c, A, C) and supplies Bz0 itself
  if (!a.bz0_grid.empty() && y0.size() == 4) y0.conservativeResize(5), y0(4) = 0;
  if (y0.size() != dimension(sys))
    throw UsageError("--init: " + std::string(to_string(sys)) + " needs " + std::to_string(dimension(sys)) +
                     " components, got " + std::to_string(y0.size()));
  if (!y0.allFinite()) throw UsageError("--init: components must be finite");
  if ((a.bz0 || !a.bz0_grid.empty()) && sys != NonlinearSystem::radial5)
    throw UsageError("--bz0: only valid with --system radial5");
  if (a.bz0 && !a.bz0_grid.empty()) throw UsageError("--bz0 and --bz0-grid are mutually exclusive");
  const IntegratorConfig cfg = a.common.config();

  if (!a.bz0_grid.empty()) {
    std::vector<double> parts;
    std::stringstream ss(a.bz0_grid);
    std::string item;
    while (std::getline(ss, item, ':')) {
      try {
        parts.push_back(parse_double(item));
      } catch (const std::exception&) {
        throw UsageError("--bz0-grid: '" + item + "' is not a number");
      }
    }
    if (parts.size() != 3) throw UsageError("--bz0-grid: expected start:stop:step");
    std::vector<double> grid;
    try {
      grid = make_grid(parts[0], parts[1], parts[2]);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--bz0-grid: ") + e.what());
    }
    const auto rows = magnetic_threshold_probe(y0.head<4>(), grid, *a.t_max, cfg, a.common.jobs);
    emit(a.common.out, out, [&](std::ostream& os) { write_csv(os, threshold_table(rows)); });
    return kOk;
  }

  if (a.bz0) y0(4) = *a.bz0;
  const auto rep = simulate_until_blowup(sys, y0, *a.t_max, cfg, !a.series.empty());
  emit(a.common.out, out, [&](std::ostream& os) { os << to_json(rep).dump(2) << '\n'; });
  if (!a.series.empty()) {
    std::ofstream f(a.series);
    if (!f) throw std::runtime_error("cannot open '" + a.series + "' for writing");
    CsvTable t = trajectory_table(sys, rep.series);
    t.header.push_back("norm");
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      t.rows[i].push_back(format_double(rep.series.states[i].lpNorm<Eigen::Infinity>()));
    write_csv(f, t);
  }
  if (!a.common.plot_script.empty())
    write_text(a.common.plot_script, plot_script_trajectory(a.series.empty() ? "-" : a.series, sys));
  return kOk;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  Common common;
  double bz0 = 0;
};

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out, std::ostream&) {
  if (!std::isfinite(a.bz0)) throw UsageError("--bz0: must be finite");
  const auto s = equilibrium_spectrum(a.bz0);
  std::vector<std::complex<double>> eig(s.eigenvalues.begin(), s.eigenvalues.end());
  emit(a.common.out, out, [&](std::ostream& os) { write_csv(os, spectrum_table(eig)); });
  return kOk;
}

const char* kSchema = R"(Output schemas (CSV: header row, comma separated, 17 significant digits):
  simulate      t, <components>, density[, K for axisym2]
  period        epsilon, T_quadrature, T_event, T_asymptotic, A_minus, A_plus, K
  floquet-scan  A_star, T, lambda_abs_1..n (descending), S, class, error
  blowup        JSON report; --series CSV: t, <components>, density, norm;
                with --bz0-grid: Bz0, verdict, reason, t_c_estimate, max_norm, max_A, min_A, max_density
  spectrum      index, re, im, abs
Config files (--config) are INI files with one [section] per subcommand,
e.g. [floquet-scan] system = radial3. Command-line flags override them.)";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Affine cold-plasma oscillations: periods, Floquet multipliers and blow-up experiments",
               "coldplasma"};
  app.footer(kSchema);
  app.set_config("--config", "", "INI file with one section per subcommand");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "integrate a trajectory and write it as CSV");
  s_sim->add_option("--system", sim.system, "axisym2 | electrostatic4 | radial5 | full9")->required();
  s_sim->add_option("--init", sim.init, "initial state, comma separated")->delimiter(',');
  s_sim->add_option("--eps", sim.eps, "axisym2 shorthand for --init 0,eps");
  s_sim->add_option("--t-max", sim.t_max, "end time");
  s_sim->add_option("--periods", sim.periods, "end time as a number of periods (axisym2, a(0) = 0)");
  s_sim->add_option("--dt", sim.dt, "uniform output spacing via dense output (default: accepted steps)");
  add_tolerances(s_sim, sim.common);
  s_sim->add_option("--out", sim.common.out, "CSV path (default stdout)");
  s_sim->add_option("--plot-script", sim.common.plot_script, "write a gnuplot script");

  PeriodArgs per;
  auto* s_per = app.add_subcommand("period", "oscillation period by quadrature, event detection and asymptotics");
  s_per->add_option("--eps", per.eps, "amplitude A(0) in (0, 0.499]");
  s_per->add_option("--grid", per.grid, "start:stop:step amplitude grid");
  add_tolerances(s_per, per.common);
  s_per->add_option("--out", per.common.out, "CSV path (default stdout)");

  ScanArgs sc;
  auto* s_sc = app.add_subcommand("floquet-scan", "characteristic multipliers over an A* grid");
  s_sc->add_option("--system", sc.system, "axisym2 | electrostatic4 | radial3 | full9")->required();
  s_sc->add_option("--grid", sc.grid, "start:stop:step grid of A* in (0, 1/2)");
  s_sc->add_option("--eps", sc.eps, "single A* value");
  add_tolerances(s_sc, sc.common);
  s_sc->add_option("--jobs", sc.common.jobs, "worker threads (0 = all cores)")->capture_default_str();
  s_sc->add_option("--out", sc.common.out, "CSV path (default stdout)");
  s_sc->add_option("--plot-script", sc.common.plot_script, "write a gnuplot script");

  BlowupArgs bu;
  auto* s_bu = app.add_subcommand("blowup", "integrate until blow-up or t_max and report");
  s_bu->add_option("--system", bu.system, "axisym2 | electrostatic4 | radial5 | full9")->capture_default_str();
  s_bu->add_option("--init", bu.init, "initial state, comma separated")->delimiter(',');
  s_bu->add_option("--t-max", bu.t_max, "end time");
  s_bu->add_option("--bz0", bu.bz0, "override the Bz component (radial5)");
  s_bu->add_option("--bz0-grid", bu.bz0_grid, "start:stop:step Bz0 probe; writes a verdict table");
  add_tolerances(s_bu, bu.common);
  s_bu->add_option("--jobs", bu.common.jobs, "worker threads for --bz0-grid (0 = all cores)")->capture_default_str();
  s_bu->add_option("--out", bu.common.out, "JSON report path (default stdout)");
  s_bu->add_option("--series", bu.series, "CSV time series path");
  s_bu->add_option("--plot-script", bu.common.plot_script, "write a gnuplot script for the series");

  SpectrumArgs sp;
  auto* s_sp = app.add_subcommand("spectrum", "eigenvalues of the linearization at Q = R = 0, Bz = Bz0");
  s_sp->add_option("--bz0", sp.bz0, "magnetic field Bz0")->required();
  s_sp->add_option("--out", sp.common.out, "CSV path (default stdout)");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s_sim) return cmd_simulate(sim, out, err);
    if (*s_per) return cmd_period(per, out, err);
    if (*s_sc) return cmd_floquet_scan(sc, out, err);
    if (*s_bu) return cmd_blowup(bu, out, err);
    if (*s_sp) return cmd_spectrum(sp, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace coldplasma::cli
