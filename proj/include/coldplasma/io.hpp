#pragma once

// CSV/JSON serialization and plot-script emission. Floats are written with
// 17 significant digits so every value round-trips exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "coldplasma/blowup.hpp"
#include "coldplasma/conserved.hpp"
#include "coldplasma/floquet.hpp"
#include "coldplasma/integrator.hpp"

namespace coldplasma {

std::string format_double(double x);
/// Strict parse: the whole string must be a number (nan/inf accepted).
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  double number(std::size_t row, const std::string& name) const;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cells containing a comma, quote or newline are quoted.
void write_csv(std::ostream& os, const CsvTable& t);
CsvTable read_csv(std::istream& is);

/// t, components..., density and, for axisym2, K.
CsvTable trajectory_table(NonlinearSystem system, const Trajectory<double>& tr);
/// Uniform samples every dt from the dense output.
CsvTable trajectory_table(NonlinearSystem system, const Trajectory<double>& tr, double dt);

CsvTable period_table(const std::vector<PeriodResult>& rows);
/// A_star, T, lambda_abs_1..n, S, class, error.
CsvTable scan_table(const std::vector<ScanRow>& rows, int n);
CsvTable threshold_table(const std::vector<ThresholdRow>& rows);
/// index, re, im, abs
CsvTable spectrum_table(const std::vector<std::complex<double>>& eig);

nlohmann::json to_json(const BlowupReport& r);
/// Reads back the scalar fields written by to_json (not the series).
BlowupReport blowup_report_from_json(const nlohmann::json& j);

/// Gnuplot scripts reading the CSV written next to them.
std::string plot_script_scan(const std::string& csv_path, VariationalSystem system, int n);
std::string plot_script_trajectory(const std::string& csv_path, NonlinearSystem system);

}  // namespace coldplasma
