#pragma once

// Nonlinear perturbation experiments: finite-time blow-up detection and
// growth-rate fits of perturbed orbits.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coldplasma/floquet.hpp"
#include "coldplasma/integrator.hpp"

namespace coldplasma {

enum class NonlinearSystem { axisym2, electrostatic4, radial5, full9 };

int dimension(NonlinearSystem s);
std::string_view to_string(NonlinearSystem s);
NonlinearSystem parse_nonlinear_system(std::string_view name);
/// Component names in storage order, e.g. {"a", "c", "A", "C", "Bz"}.
std::vector<std::string> component_names(NonlinearSystem s);

/// Right-hand side usable with integrate(); throws on dimension mismatch.
std::function<void(double, const Vec<double>&, Vec<double>&)> nonlinear_rhs(NonlinearSystem s);

/// Electron density of the state (1 - 2A, 1 - A - D, ...).
double state_density(NonlinearSystem s, const Eigen::VectorXd& y);
/// The A component (radial component of the field gradient).
double state_A(NonlinearSystem s, const Eigen::VectorXd& y);

enum class Verdict { BlewUp, BoundedThrough, Inconclusive };
enum class StopReason { NormThreshold, StepUnderflow, Completed, StepBudget };
std::string_view to_string(Verdict v);
std::string_view to_string(StopReason r);

struct BlowupReport {
  NonlinearSystem system = NonlinearSystem::radial5;
  Eigen::VectorXd initial;
  double t_max = 0;
  Verdict verdict = Verdict::Inconclusive;
  StopReason reason = StopReason::Completed;
  double t_c_estimate = 0;  // last valid time; t_max when bounded
  double t_c_coarse = 0;    // before the tightened re-run
  double max_norm = 0;      // max |y|_inf over accepted steps
  double max_A = 0;
  double min_A = 0;
  double max_density = 0;
  double min_density = 0;
  Eigen::VectorXd final_state;
  std::size_t steps = 0;
  Trajectory<double> series;  // accepted steps, kept only when requested
};

/// Integrates until t_max or a divergence guard fires. On blow-up the last
/// stretch (from the last state with norm <= 1e3) is re-run with 100x tighter
/// tolerances and t_c_estimate is taken from that run.
BlowupReport simulate_until_blowup(NonlinearSystem system, const Eigen::VectorXd& y0, double t_max,
                                   const IntegratorConfig& cfg = {}, bool keep_series = false);

class FitFailure : public std::runtime_error {
 public:
  FitFailure(const std::string& what, double saturation_time)
      : std::runtime_error(what), saturation_time(saturation_time) {}
  double saturation_time;
};

struct GrowthFit {
  double mu = 0;
  double T = 0;
  std::vector<double> times;       // sample times k T
  std::vector<double> deviations;  // |perturbed - base| at those times
  int samples_used = 0;
};

/// Nonlinear perturbation of the axisymmetric orbit through (0, A_star),
/// perturbation given in the tangent coordinates of `system`
/// (axisym2: (a1, A1); electrostatic4: (A1, a1, delta1, sigma1);
/// radial3: (C1, c1, Bz1)). Base and perturbed states are integrated as one
/// system and the log-deviation sampled once per period is fitted by least
/// squares. Samples stop at the first deviation above `saturation`.
GrowthFit growth_rate(VariationalSystem system, double A_star, const Eigen::VectorXd& perturbation,
                      int n_periods = 20, const IntegratorConfig& cfg = {}, double scale = 1e-6,
                      double saturation = 1e-2);

struct ThresholdRow {
  double Bz0 = 0;
  BlowupReport report;
};

/// simulate_until_blowup on radial5 from (a, c, A, C, Bz0) for each Bz0.
std::vector<ThresholdRow> magnetic_threshold_probe(const Eigen::Vector4d& acAC,
                                                   const std::vector<double>& bz0_grid,
                                                   double t_max, const IntegratorConfig& cfg = {},
                                                   int jobs = 1);

}  // namespace coldplasma
