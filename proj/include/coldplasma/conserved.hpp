#pragma once

// First integral and period of the axisymmetric system a' = -A - a^2,
// A' = a - 2 A a. Level sets
//   a^2 = (ln|2A - 1| / 2 + K)(2A - 1) - 1/2
// are closed curves for A(0) < 1/2.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "coldplasma/integrator.hpp"

namespace coldplasma {

class SingularDensity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};
class NoBoundedOrbit : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};
class EventNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InvalidAmplitude : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest amplitude accepted by the period routines; the density 1 - 2A
/// degenerates as A -> 1/2.
inline constexpr double kMaxAmplitude = 0.499;

struct PeriodResult {
  double epsilon = 0;
  double T_quadrature = 0;
  double T_event = 0;
  double T_asymptotic = 0;
  double A_minus = 0;
  double A_plus = 0;
  double K = 0;
};

/// K = (a^2 + 1/2) / (2A - 1) - ln|2A - 1| / 2. Throws SingularDensity at A = 1/2.
template <typename Scalar>
Scalar first_integral_K(Scalar a, Scalar A) {
  using std::abs;
  using std::log;
  const Scalar w = Scalar(2) * A - Scalar(1);
  if (abs(w) <= Scalar(2e-14)) throw SingularDensity("first_integral_K: A = 1/2");
  return (a * a + Scalar(0.5)) / w - log(abs(w)) / Scalar(2);
}

/// a^2 as a function of A on the level set K (negative outside the curve).
double phase_curve_a2(double A, double K);

/// Turning points A_minus < 0 < A_plus of the level set K. Requires K < -1/2.
std::pair<double, double> amplitude_roots(double K);

/// 2 pi (1 - eps^2 / 12).
template <typename Scalar>
Scalar period_asymptotic(Scalar eps) {
  return Scalar(2) * std::numbers::pi_v<Scalar> * (Scalar(1) - eps * eps / Scalar(12));
}

/// Period by quadrature of 2 * int dA / ((1 - 2A) a(A)) between the turning
/// points, using square-root substitutions at both ends.
double period_quadrature(double eps, double tol = 1e-12);

/// Period from the first falling zero of a(t) after t = 0, starting at (a, A) = (0, eps).
double period_event(double eps, const IntegratorConfig& cfg = {});

PeriodResult period_all(double eps, const IntegratorConfig& cfg = {});

/// int_0^T a(t) dt over one period.
double velocity_integral_over_period(double eps, const IntegratorConfig& cfg = {});

/// max |K(t) - K(0)| along the orbit from (0, eps) over n_periods periods.
double first_integral_drift(double eps, int n_periods, const IntegratorConfig& cfg = {});

/// Throws InvalidAmplitude unless 0 < eps <= kMaxAmplitude.
void check_amplitude(double eps);

}  // namespace coldplasma
