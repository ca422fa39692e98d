#include "coldplasma/blowup.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "coldplasma/conserved.hpp"
#include "coldplasma/ode_core.hpp"

namespace coldplasma {

int dimension(NonlinearSystem s) {
  switch (s) {
    case NonlinearSystem::axisym2: return 2;
    case NonlinearSystem::electrostatic4: return 4;
    case NonlinearSystem::radial5: return 5;
    case NonlinearSystem::full9: return 9;
  }
  return 0;
}

std::string_view to_string(NonlinearSystem s) {
  switch (s) {
    case NonlinearSystem::axisym2: return "axisym2";
    case NonlinearSystem::electrostatic4: return "electrostatic4";
    case NonlinearSystem::radial5: return "radial5";
    case NonlinearSystem::full9: return "full9";
  }
  return "?";
}

NonlinearSystem parse_nonlinear_system(std::string_view name) {
  for (auto s : {NonlinearSystem::axisym2, NonlinearSystem::electrostatic4, NonlinearSystem::radial5,
                 NonlinearSystem::full9})
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown system '" + std::string(name) +
                              "' (expected axisym2, electrostatic4, radial5 or full9)");
}

std::vector<std::string> component_names(NonlinearSystem s) {
  switch (s) {
    case NonlinearSystem::axisym2: return {"a", "A"};
    case NonlinearSystem::electrostatic4: return {"a", "d", "A", "D"};
    case NonlinearSystem::radial5: return {"a", "c", "A", "C", "Bz"};
    case NonlinearSystem::full9: return {"a", "b", "c", "d", "A", "B", "C", "D", "Bz"};
  }
  return {};
}

namespace {

template <typename State, typename F>
auto wrap(F f) {
  return [f](double, const Vec<double>& y, Vec<double>& dy) {
    if (y.size() != State::dim) throw std::invalid_argument("state has the wrong dimension");
    dy = f(State::from_vector(y)).to_vector();
  };
}

}  // namespace

std::function<void(double, const Vec<double>&, Vec<double>&)> nonlinear_rhs(NonlinearSystem s) {
  switch (s) {
    case NonlinearSystem::axisym2:
      return wrap<AxisymState2<double>>([](const auto& x) { return rhs_axisym(x); });
    case NonlinearSystem::electrostatic4:
      return wrap<ElectrostaticState4<double>>([](const auto& x) { return rhs_electrostatic(x); });
    case NonlinearSystem::radial5:
      return wrap<RadialState5<double>>([](const auto& x) { return rhs_radial(x); });
    case NonlinearSystem::full9:
      return wrap<PlasmaState9<double>>([](const auto& x) { return rhs_full(x); });
  }
  throw std::logic_error("nonlinear_rhs");
}

double state_density(NonlinearSystem s, const Eigen::VectorXd& y) {
  switch (s) {
    case NonlinearSystem::axisym2: return 1 - 2 * y(1);
    case NonlinearSystem::electrostatic4: return 1 - y(2) - y(3);
    case NonlinearSystem::radial5: return 1 - 2 * y(2);
    case NonlinearSystem::full9: return 1 - y(4) - y(7);
  }
  return 0;
}

double state_A(NonlinearSystem s, const Eigen::VectorXd& y) {
  switch (s) {
    case NonlinearSystem::axisym2: return y(1);
    case NonlinearSystem::electrostatic4: return y(2);
    case NonlinearSystem::radial5: return y(2);
    case NonlinearSystem::full9: return y(4);
  }
  return 0;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::BlewUp: return "BlewUp";
    case Verdict::BoundedThrough: return "BoundedThrough";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::NormThreshold: return "NormThreshold";
    case StopReason::StepUnderflow: return "StepUnderflow";
    case StopReason::Completed: return "Completed";
    case StopReason::StepBudget: return "StepBudget";
  }
  return "?";
}

namespace {

StopReason reason_of(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::Diverged: return StopReason::NormThreshold;
    case IntegrationStatus::StepSizeUnderflow: return StopReason::StepUnderflow;
    case IntegrationStatus::StepBudgetExhausted: return StopReason::StepBudget;
    default: return StopReason::Completed;
  }
}

}  // namespace

BlowupReport simulate_until_blowup(NonlinearSystem system, const Eigen::VectorXd& y0, double t_max,
                                   const IntegratorConfig& cfg, bool keep_series) {
  if (y0.size() != dimension(system))
    throw std::invalid_argument("simulate_until_blowup: initial state has " + std::to_string(y0.size()) +
                                " components, " + std::string(to_string(system)) + " needs " +
                                std::to_string(dimension(system)));
  if (!(t_max > 0)) throw std::invalid_argument("simulate_until_blowup: t_max must be positive");
  if (!y0.allFinite()) throw std::invalid_argument("simulate_until_blowup: initial state is not finite");

  auto rhs = nonlinear_rhs(system);
  IntegratorConfig c = cfg;
  c.record_steps = true;
  auto tr = integrate<double>(rhs, y0, 0.0, t_max, c);

  BlowupReport rep;
  rep.system = system;
  rep.initial = y0;
  rep.t_max = t_max;
  rep.steps = tr.times.size() - 1;
  rep.reason = reason_of(tr.status);
  rep.t_c_coarse = rep.t_c_estimate = tr.last_time();
  rep.final_state = tr.last_state();

  rep.max_A = rep.min_A = state_A(system, y0);
  rep.max_density = rep.min_density = state_density(system, y0);
  for (const auto& y : tr.states) {
    rep.max_norm = std::max(rep.max_norm, y.lpNorm<Eigen::Infinity>());
    const double A = state_A(system, y), n = state_density(system, y);
    rep.max_A = std::max(rep.max_A, A);
    rep.min_A = std::min(rep.min_A, A);
    rep.max_density = std::max(rep.max_density, n);
    rep.min_density = std::min(rep.min_density, n);
  }

  switch (rep.reason) {
    case StopReason::Completed: rep.verdict = Verdict::BoundedThrough; break;
    case StopReason::StepBudget: rep.verdict = Verdict::Inconclusive; break;
    default: rep.verdict = Verdict::BlewUp; break;
  }

  if (rep.verdict == Verdict::BlewUp) {
    // restart from the last moderate state
    std::size_t k = 0;
    for (std::size_t i = tr.states.size(); i-- > 0;)
      if (tr.states[i].lpNorm<Eigen::Infinity>() <= 1e3) {
        k = i;
        break;
      }
    IntegratorConfig tight = c.tightened(100);
    tight.record_steps = false;
    const double t_start = tr.times[k];
    if (t_start < t_max) {
      auto again = integrate<double>(rhs, tr.states[k], t_start, t_max, tight);
      if (!again.completed() && again.status != IntegrationStatus::StepBudgetExhausted)
        rep.t_c_estimate = again.last_time();
    }
  }

  if (keep_series) rep.series = std::move(tr);
  return rep;
}

namespace {

// Maps a tangent vector to a nonlinear state offset, and back.
struct TangentMap {
  NonlinearSystem nl;
  Eigen::VectorXd base;
  Eigen::MatrixXd to_state;  // state offset = to_state * tangent
  Eigen::MatrixXd to_tangent;
};

TangentMap tangent_map(VariationalSystem system, double A_star) {
  TangentMap m;
  switch (system) {
    case VariationalSystem::axisym2:
      m.nl = NonlinearSystem::axisym2;
      m.base = Eigen::Vector2d(0, A_star);
      m.to_state = Eigen::Matrix2d::Identity();
      break;
    case VariationalSystem::electrostatic4: {
      // tangent (A1, a1, delta1, sigma1), state (a, d, A, D) with d = a + sigma, D = A + delta
      m.nl = NonlinearSystem::electrostatic4;
      m.base = Eigen::Vector4d(0, 0, A_star, A_star);
      Eigen::Matrix4d P;
      P << 0, 1, 0, 0,
           0, 1, 0, 1,
           1, 0, 0, 0,
           1, 0, 1, 0;
      m.to_state = P;
      break;
    }
    case VariationalSystem::radial3: {
      // tangent (C1, c1, Bz1), state (a, c, A, C, Bz)
      m.nl = NonlinearSystem::radial5;
      m.base = (Eigen::VectorXd(5) << 0, 0, A_star, 0, 0).finished();
      Eigen::MatrixXd P = Eigen::MatrixXd::Zero(5, 3);
      P(3, 0) = 1;
      P(1, 1) = 1;
      P(4, 2) = 1;
      m.to_state = P;
      break;
    }
    case VariationalSystem::full9:
      m.nl = NonlinearSystem::full9;
      m.base = (Eigen::VectorXd(9) << 0, 0, 0, 0, A_star, 0, 0, A_star, 0).finished();
      m.to_state = Eigen::MatrixXd::Identity(9, 9);
      break;
  }
  // least-squares inverse; exact on the image for the square cases
  m.to_tangent = m.to_state.completeOrthogonalDecomposition().pseudoInverse();
  return m;
}

}  // namespace

GrowthFit growth_rate(VariationalSystem system, double A_star, const Eigen::VectorXd& perturbation,
                      int n_periods, const IntegratorConfig& cfg, double scale, double saturation) {
  if (!(A_star > 0 && A_star < 0.5)) throw InvalidAmplitude("growth_rate: A_star must lie in (0, 1/2)");
  if (perturbation.size() != dimension(system))
    throw std::invalid_argument("growth_rate: perturbation has the wrong dimension");
  if (!(perturbation.norm() > 0)) throw std::invalid_argument("growth_rate: perturbation must be nonzero");
  if (n_periods < 1) throw std::invalid_argument("growth_rate: n_periods must be >= 1");

  const TangentMap map = tangent_map(system, A_star);
  const Eigen::Index n = map.base.size();
  auto f = nonlinear_rhs(map.nl);
  auto rhs = [&f, n](double t, const Vec<double>& y, Vec<double>& dy) {
    dy.resize(2 * n);
    Vec<double> a = y.head(n), b = y.tail(n), da(n), db(n);
    f(t, a, da);
    f(t, b, db);
    dy.head(n) = da;
    dy.tail(n) = db;
  };

  GrowthFit fit;
  fit.T = period_event(A_star, cfg);
  const Eigen::VectorXd v = perturbation / perturbation.norm() * scale;
  Vec<double> y(2 * n);
  y.head(n) = map.base;
  y.tail(n) = map.base + map.to_state * v;

  IntegratorConfig c = cfg;
  c.record_steps = false;
  auto deviation = [&](const Vec<double>& s) {
    return (map.to_tangent * (s.tail(n) - s.head(n))).norm();
  };

  fit.times.push_back(0);
  fit.deviations.push_back(deviation(y));
  double saturated_at = -1;
  for (int k = 1; k <= n_periods; ++k) {
    auto tr = integrate<double>(rhs, y, (k - 1) * fit.T, k * fit.T, c);
    if (!tr.completed()) {
      saturated_at = tr.last_time();
      break;
    }
    y = tr.last_state();
    const double dev = deviation(y);
    if (!(dev <= saturation)) {
      saturated_at = k * fit.T;
      break;
    }
    fit.times.push_back(k * fit.T);
    fit.deviations.push_back(dev);
  }
  fit.samples_used = static_cast<int>(fit.times.size());
  if (fit.samples_used < 5)
    throw FitFailure("growth_rate: deviation saturated after " + std::to_string(fit.samples_used) +
                         " samples at t = " + std::to_string(saturated_at),
                     saturated_at);

  // least-squares slope of log deviation against time
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double m = fit.samples_used;
  for (int i = 0; i < fit.samples_used; ++i) {
    const double t = fit.times[i], l = std::log(fit.deviations[i]);
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
  }
  fit.mu = (m * stl - st * sl) / (m * stt - st * st);
  return fit;
}

std::vector<ThresholdRow> magnetic_threshold_probe(const Eigen::Vector4d& acAC,
                                                   const std::vector<double>& bz0_grid,
                                                   double t_max, const IntegratorConfig& cfg,
                                                   int jobs) {
  cfg.validate();
  if (!(t_max > 0)) throw std::invalid_argument("magnetic_threshold_probe: t_max must be positive");
  std::vector<ThresholdRow> rows(bz0_grid.size());
  auto work = [&](std::size_t i) {
    Eigen::VectorXd y0(5);
    y0 << acAC(0), acAC(1), acAC(2), acAC(3), bz0_grid[i];
    rows[i].Bz0 = bz0_grid[i];
    rows[i].report = simulate_until_blowup(NonlinearSystem::radial5, y0, t_max, cfg);
  };
  unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(bz0_grid.size(), 1)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < bz0_grid.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < bz0_grid.size(); i = next++) work(i);
    });
  pool.clear();
  return rows;
}

}  // namespace coldplasma
