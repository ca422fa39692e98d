#pragma once

// Monodromy matrices of the variational systems over one period of the
// axisymmetric base orbit, characteristic multipliers and parameter scans.

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coldplasma/eigen_small.hpp"
#include "coldplasma/integrator.hpp"

namespace coldplasma {

enum class VariationalSystem { axisym2, electrostatic4, radial3, full9 };

int dimension(VariationalSystem s);
std::string_view to_string(VariationalSystem s);
/// Accepts the names printed by to_string; throws std::invalid_argument otherwise.
VariationalSystem parse_variational_system(std::string_view name);

using Multipliers = std::vector<std::complex<double>>;

struct MonodromyResult {
  VariationalSystem system = VariationalSystem::axisym2;
  double A_star = 0;
  double T = 0;       // one period of the base orbit
  int periods = 1;    // Psi_T is the fundamental matrix at periods * T
  Eigen::MatrixXd Psi_T;
  Multipliers multipliers;  // sorted by decreasing modulus
  double S = 0;
  double det_residual = 0;    // |det Psi_T - 1|
  double trace_integral = 0;  // int_0^{periods T} tr M dt
  double eig_backward_error = 0;
};

/// Integrates base orbit, trace integral and the n tangent columns together
/// from Psi(0) = I over `periods` periods. T comes from period_event with the
/// same configuration.
MonodromyResult fundamental_matrix(VariationalSystem system, double A_star,
                                   const IntegratorConfig& cfg = {}, int periods = 1);

/// Tangent vector v carried over [0, periods T] on its own (no matrix), for
/// linearity checks against Psi_T * v.
Eigen::VectorXd propagate_tangent(VariationalSystem system, double A_star,
                                  const Eigen::VectorXd& v, const IntegratorConfig& cfg = {},
                                  int periods = 1);

/// max |lambda_i| - 1.
double instability_measure(const Multipliers& m);

/// |det Psi_T - exp(int tr M)|.
double liouville_residual(const MonodromyResult& r);

/// Small-amplitude multipliers: electrostatic4 gives 1 +- (sqrt3 pi / 6) eps^2
/// and 1 +- (sqrt3 pi / 2) eps^2; radial3 gives 1 +- (sqrt5 pi / 3) eps^2 and 1.
std::vector<double> asymptotic_multipliers(VariationalSystem system, double eps);

enum class DominantClass { real_pair, complex_pair };
std::string_view to_string(DominantClass c);

/// Imaginary parts above this count as a complex pair.
inline constexpr double kComplexThreshold = 1e-10;

DominantClass classify(const Multipliers& sorted_multipliers);

struct ScanRow {
  double A_star = 0;
  double T = 0;
  std::vector<double> lambda_abs;  // descending
  double S = 0;
  DominantClass cls = DominantClass::real_pair;
  double det_residual = 0;
  std::string error;  // empty on success
  bool ok() const { return error.empty(); }
};

/// One row per grid point, in grid order. Rows run on `jobs` threads
/// (0 = hardware concurrency). A failing row carries its error message and
/// the scan continues.
std::vector<ScanRow> scan(VariationalSystem system, const std::vector<double>& grid,
                          const IntegratorConfig& cfg = {}, int jobs = 1);

/// start:stop:step with both ends included up to rounding.
std::vector<double> make_grid(double start, double stop, double step);

}  // namespace coldplasma
