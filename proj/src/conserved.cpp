#include "coldplasma/conserved.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace coldplasma {

void check_amplitude(double eps) {
  if (!(eps > 0 && eps <= kMaxAmplitude))
    throw InvalidAmplitude("amplitude must lie in (0, " + std::to_string(kMaxAmplitude) +
                           "], got " + std::to_string(eps));
}

double phase_curve_a2(double A, double K) {
  const double w = 2 * A - 1;
  return (0.5 * std::log(std::abs(w)) + K) * w - 0.5;
}

namespace {

// Bisection down to adjacent doubles; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 2000; ++i) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2;
}

}  // namespace

namespace {

// The level set in the variable u = ln(1 - 2A):
//   a^2 = g(u) = -(u / 2 + K) e^u - 1/2.
// Its zeros are the turning points; u < 0 is the upper one (A > 0).
double g_log(double u, double K) { return -(u / 2 + K) * std::exp(u) - 0.5; }

// Lower turning point in u. g(0) = -K - 1/2 > 0 and g(-2K) = -1/2 < 0.
double lower_root_log(double K) {
  return bisect([K](double u) { return g_log(u, K); }, 0.0, -2 * K);
}

}  // namespace

std::pair<double, double> amplitude_roots(double K) {
  auto f = [K](double A) { return phase_curve_a2(A, K); };
  if (!(K < -0.5)) throw NoBoundedOrbit("amplitude_roots: level set does not enclose the origin");

  const double hi_edge = 0.5 - 1e-15;
  if (!(f(hi_edge) < 0)) throw NoBoundedOrbit("amplitude_roots: no upper turning point below A = 1/2");
  const double a_plus = bisect(f, 0.0, hi_edge);
  const double a_minus = -std::expm1(lower_root_log(K)) / 2;
  if (!std::isfinite(a_minus)) throw NoBoundedOrbit("amplitude_roots: lower turning point overflows");
  return {a_minus, a_plus};
}

namespace {

// In u the period is int du / sqrt(g(u)) over [u_plus, u_minus]. Near a
// turning point u_t put u = u_t + sigma s^2; then
//   g / (sigma s^2) = (expm1(d) / d - e^(u_t + d)) / 2,  d = sigma s^2,
// which has no cancellation at s = 0 because e^(u_t) != 1 there.
double half_integral(double u_t, double sigma, double s_max, double tol) {
  auto integrand = [=](double s) {
    const double d = sigma * s * s;
    const double em1 = std::abs(d) < 1e-8 ? 1 + d / 2 + d * d / 6 : std::expm1(d) / d;
    const double q = sigma * (em1 - std::exp(u_t + d)) / 2;
    return 2 / std::sqrt(q);
  };
  double err = 0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, s_max, 20,
                                                                        tol, &err);
}

}  // namespace

double period_quadrature(double eps, double tol) {
  check_amplitude(eps);
  const double K = first_integral_K(0.0, eps);
  const double u_plus = std::log1p(-2 * eps);  // (0, eps) is itself a turning point
  const double u_minus = lower_root_log(K);
  // split at u = 0, i.e. A = 0
  const double upper = half_integral(u_plus, +1.0, std::sqrt(-u_plus), tol);
  const double lower = half_integral(u_minus, -1.0, std::sqrt(u_minus), tol);
  return upper + lower;
}

namespace {

auto axisym_rhs = vector_rhs<AxisymState2<double>>([](const AxisymState2<double>& s) {
  return rhs_axisym(s);
});

}  // namespace

double period_event(double eps, const IntegratorConfig& cfg) {
  check_amplitude(eps);
  IntegratorConfig c = cfg;
  c.record_steps = false;
  // the orbit is bounded but reaches A ~ -1e9 already at eps = 0.48
  c.divergence_norm = std::numeric_limits<double>::max();
  EventSpec<double> ev{[](double, const Vec<double>& y) { return y(0); }, EventDirection::Falling,
                       1e-14, true};
  auto res = integrate_with_events<double>(axisym_rhs, AxisymState2<double>{0, eps}.to_vector(),
                                           0.0, 4 * std::numbers::pi, c, {ev});
  if (res.hits.empty())
    throw EventNotFound("period_event: no return to a = 0 within 4 pi (status " +
                        std::string(to_string(res.trajectory.status)) + ")");
  return res.hits.front().t;
}

PeriodResult period_all(double eps, const IntegratorConfig& cfg) {
  PeriodResult r;
  r.epsilon = eps;
  r.K = first_integral_K(0.0, eps);
  const auto roots = amplitude_roots(r.K);
  r.A_minus = roots.first;
  r.A_plus = roots.second;
  r.T_quadrature = period_quadrature(eps);
  r.T_event = period_event(eps, cfg);
  r.T_asymptotic = period_asymptotic(eps);
  return r;
}

double velocity_integral_over_period(double eps, const IntegratorConfig& cfg) {
  const double T = period_event(eps, cfg);
  auto rhs = [](double, const Vec<double>& y, Vec<double>& dy) {
    dy.resize(3);
    dy(0) = -y(1) - y(0) * y(0);
    dy(1) = y(0) - 2 * y(1) * y(0);
    dy(2) = y(0);
  };
  IntegratorConfig c = cfg;
  c.record_steps = false;
  auto tr = integrate<double>(rhs, Vec<double>{{0.0, eps, 0.0}}, 0.0, T, c);
  if (!tr.completed()) throw IntegrationError(tr.status, tr.last_time(), "velocity_integral_over_period");
  return tr.last_state()(2);
}

double first_integral_drift(double eps, int n_periods, const IntegratorConfig& cfg) {
  check_amplitude(eps);
  const double T = period_event(eps, cfg);
  IntegratorConfig c = cfg;
  c.record_steps = true;
  auto tr = integrate<double>(axisym_rhs, AxisymState2<double>{0, eps}.to_vector(), 0.0,
                              n_periods * T, c);
  if (!tr.completed()) throw IntegrationError(tr.status, tr.last_time(), "first_integral_drift");
  const double k0 = first_integral_K(0.0, eps);
  double worst = 0;
  for (const auto& y : tr.states) worst = std::max(worst, std::abs(first_integral_K(y(0), y(1)) - k0));
  return worst;
}

}  // namespace coldplasma
