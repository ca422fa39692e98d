#include "coldplasma/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "coldplasma/ode_core.hpp"

namespace coldplasma {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last || first == last)
    throw CsvError("not a number: '" + s + "'");
  return v;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw CsvError("no column named '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_double(rows.at(row).at(column(name)));
}

namespace {

void write_cell(std::ostream& os, const std::string& c) {
  if (c.find_first_of(",\"\n\r") == std::string::npos) {
    os << c;
    return;
  }
  os << '"';
  for (char ch : c) {
    if (ch == '"') os << '"';
    os << ch;
  }
  os << '"';
}

void write_row(std::ostream& os, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    write_cell(os, row[i]);
  }
  os << '\n';
}

// One record; handles quoted cells with embedded newlines. Returns false at EOF.
bool read_record(std::istream& is, std::vector<std::string>& out) {
  out.clear();
  std::string cell;
  bool quoted = false, any = false;
  char ch;
  while (is.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (is.peek() == '"') {
          is.get();
          cell += '"';
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n') {
      out.push_back(std::move(cell));
      return true;
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (quoted) throw CsvError("unterminated quoted cell");
  if (!any) return false;
  out.push_back(std::move(cell));
  return true;
}

}  // namespace

void write_csv(std::ostream& os, const CsvTable& t) {
  write_row(os, t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw CsvError("row width does not match header");
    write_row(os, r);
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  if (!read_record(is, t.header)) throw CsvError("empty CSV input");
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (read_record(is, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != t.header.size())
      throw CsvError("record " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                     " cells, header has " + std::to_string(t.header.size()));
    t.rows.push_back(rec);
  }
  return t;
}

namespace {

std::vector<std::string> trajectory_header(NonlinearSystem system) {
  std::vector<std::string> h{"t"};
  for (auto& c : component_names(system)) h.push_back(c);
  h.push_back("density");
  if (system == NonlinearSystem::axisym2) h.push_back("K");
  return h;
}

std::vector<std::string> trajectory_row(NonlinearSystem system, double t, const Eigen::VectorXd& y) {
  std::vector<std::string> r{format_double(t)};
  for (Eigen::Index i = 0; i < y.size(); ++i) r.push_back(format_double(y(i)));
  r.push_back(format_double(state_density(system, y)));
  if (system == NonlinearSystem::axisym2) {
    double K = std::nan("");
    try {
      K = first_integral_K(y(0), y(1));
    } catch (const SingularDensity&) {
    }
    r.push_back(format_double(K));
  }
  return r;
}

}  // namespace

CsvTable trajectory_table(NonlinearSystem system, const Trajectory<double>& tr) {
  CsvTable t;
  t.header = trajectory_header(system);
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    t.rows.push_back(trajectory_row(system, tr.times[i], tr.states[i]));
  return t;
}

CsvTable trajectory_table(NonlinearSystem system, const Trajectory<double>& tr, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("sampling interval must be positive");
  CsvTable t;
  t.header = trajectory_header(system);
  auto rhs = nonlinear_rhs(system);
  const double t0 = tr.times.front(), t1 = tr.times.back();
  const auto n = static_cast<long>(std::floor((t1 - t0) / dt * (1 + 1e-12)));
  for (long k = 0; k <= n; ++k) {
    const double tk = std::min(t1, t0 + static_cast<double>(k) * dt);
    t.rows.push_back(trajectory_row(system, tk, tr.times.size() < 2 ? tr.states.front() : sample(rhs, tr, tk)));
  }
  if (t0 + static_cast<double>(n) * dt < t1)
    t.rows.push_back(trajectory_row(system, t1, tr.states.back()));
  return t;
}

CsvTable period_table(const std::vector<PeriodResult>& rows) {
  CsvTable t;
  t.header = {"epsilon", "T_quadrature", "T_event", "T_asymptotic", "A_minus", "A_plus", "K"};
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.epsilon), format_double(r.T_quadrature), format_double(r.T_event),
                      format_double(r.T_asymptotic), format_double(r.A_minus), format_double(r.A_plus),
                      format_double(r.K)});
  return t;
}

CsvTable scan_table(const std::vector<ScanRow>& rows, int n) {
  CsvTable t;
  t.header = {"A_star", "T"};
  for (int i = 1; i <= n; ++i) t.header.push_back("lambda_abs_" + std::to_string(i));
  t.header.insert(t.header.end(), {"S", "class", "error"});
  for (const auto& r : rows) {
    std::vector<std::string> c{format_double(r.A_star)};
    if (r.ok()) {
      c.push_back(format_double(r.T));
      for (int i = 0; i < n; ++i)
        c.push_back(format_double(i < static_cast<int>(r.lambda_abs.size()) ? r.lambda_abs[i] : std::nan("")));
      c.push_back(format_double(r.S));
      c.emplace_back(to_string(r.cls));
      c.emplace_back("");
    } else {
      for (int i = 0; i < n + 2; ++i) c.emplace_back("nan");
      c.emplace_back("error");
      c.push_back(r.error);
    }
    t.rows.push_back(std::move(c));
  }
  return t;
}

CsvTable threshold_table(const std::vector<ThresholdRow>& rows) {
  CsvTable t;
  t.header = {"Bz0", "verdict", "reason", "t_c_estimate", "max_norm", "max_A", "min_A", "max_density"};
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.Bz0), std::string(to_string(r.report.verdict)),
                      std::string(to_string(r.report.reason)), format_double(r.report.t_c_estimate),
                      format_double(r.report.max_norm), format_double(r.report.max_A),
                      format_double(r.report.min_A), format_double(r.report.max_density)});
  return t;
}

CsvTable spectrum_table(const std::vector<std::complex<double>>& eig) {
  CsvTable t;
  t.header = {"index", "re", "im", "abs"};
  for (std::size_t i = 0; i < eig.size(); ++i)
    t.rows.push_back({std::to_string(i + 1), format_double(eig[i].real()), format_double(eig[i].imag()),
                      format_double(std::abs(eig[i]))});
  return t;
}

namespace {

// JSON has no nan/inf; such values are written as strings.
nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double num_from(const nlohmann::json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num_from(j[i]);
  return v;
}

template <typename E>
E enum_from(const std::string& s, std::initializer_list<E> all) {
  for (E e : all)
    if (to_string(e) == s) return e;
  throw std::invalid_argument("unknown value '" + s + "' in report");
}

}  // namespace

nlohmann::json to_json(const BlowupReport& r) {
  nlohmann::json j;
  j["system"] = std::string(to_string(r.system));
  j["components"] = component_names(r.system);
  j["initial"] = vec_json(r.initial);
  j["t_max"] = num(r.t_max);
  j["verdict"] = std::string(to_string(r.verdict));
  j["reason"] = std::string(to_string(r.reason));
  j["t_c_estimate"] = num(r.t_c_estimate);
  j["t_c_coarse"] = num(r.t_c_coarse);
  j["max_norm_observed"] = num(r.max_norm);
  j["max_A_observed"] = num(r.max_A);
  j["min_A_observed"] = num(r.min_A);
  j["max_density_observed"] = num(r.max_density);
  j["min_density_observed"] = num(r.min_density);
  j["final_state"] = vec_json(r.final_state);
  j["steps"] = r.steps;
  return j;
}

BlowupReport blowup_report_from_json(const nlohmann::json& j) {
  BlowupReport r;
  r.system = parse_nonlinear_system(j.at("system").get<std::string>());
  r.initial = vec_from(j.at("initial"));
  r.t_max = num_from(j.at("t_max"));
  r.verdict = enum_from(j.at("verdict").get<std::string>(),
                        {Verdict::BlewUp, Verdict::BoundedThrough, Verdict::Inconclusive});
  r.reason = enum_from(j.at("reason").get<std::string>(),
                       {StopReason::NormThreshold, StopReason::StepUnderflow, StopReason::Completed,
                        StopReason::StepBudget});
  r.t_c_estimate = num_from(j.at("t_c_estimate"));
  r.t_c_coarse = num_from(j.at("t_c_coarse"));
  r.max_norm = num_from(j.at("max_norm_observed"));
  r.max_A = num_from(j.at("max_A_observed"));
  r.min_A = num_from(j.at("min_A_observed"));
  r.max_density = num_from(j.at("max_density_observed"));
  r.min_density = num_from(j.at("min_density_observed"));
  r.final_state = vec_from(j.at("final_state"));
  r.steps = j.at("steps").get<std::size_t>();
  return r;
}

std::string plot_script_scan(const std::string& csv_path, VariationalSystem system, int n) {
  std::ostringstream s;
  s << "# gnuplot: characteristic multipliers |lambda_i| against A_star\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 'A*'\n"
    << "set ylabel '|lambda|'\n"
    << "set title '" << to_string(system) << " multipliers'\n"
    << "set logscale y\n"
    << "plot";
  for (int i = 1; i <= n; ++i) s << (i > 1 ? "," : "") << " '" << csv_path << "' using 1:" << i + 2 << " with linespoints";
  s << "\n";
  return s.str();
}

std::string plot_script_trajectory(const std::string& csv_path, NonlinearSystem system) {
  const auto names = component_names(system);
  std::ostringstream s;
  s << "# gnuplot: state components against t\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 't'\n"
    << "plot";
  for (std::size_t i = 0; i < names.size(); ++i)
    s << (i ? "," : "") << " '" << csv_path << "' using 1:" << i + 2 << " with lines";
  s << "\n";
  return s.str();
}

}  // namespace coldplasma
