#pragma once

// Adaptive Runge-Kutta-Fehlberg 4(5) integrator.
//
// The local error estimate is the difference of the embedded 4th- and
// 5th-order members; the 5th-order value is propagated (local extrapolation). Step control is the elementary
// controller h_new = h * clamp(0.9 * err^(-1/5), 0.2, 5) on the mixed
// componentwise norm  max_i |e_i| / (atol + rtol * max(|y_i|, |y_new_i|)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

#include "coldplasma/ode_core.hpp"

namespace coldplasma {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 0.25;
  std::int64_t max_steps = 50'000'000;
  double divergence_norm = 1e6;
  /// Store every accepted step; when false only the endpoints are kept.
  bool record_steps = true;

  void validate() const {
    if (!(rtol > 0)) throw std::invalid_argument("IntegratorConfig: rtol must be > 0");
    if (!(atol > 0)) throw std::invalid_argument("IntegratorConfig: atol must be > 0");
    if (!(h_min > 0)) throw std::invalid_argument("IntegratorConfig: h_min must be > 0");
    if (!(h_max >= h_min)) throw std::invalid_argument("IntegratorConfig: need h_min <= h_max");
    if (!(h_init > 0)) throw std::invalid_argument("IntegratorConfig: h_init must be > 0");
    if (max_steps <= 0) throw std::invalid_argument("IntegratorConfig: max_steps must be > 0");
    if (!(divergence_norm > 0))
      throw std::invalid_argument("IntegratorConfig: divergence_norm must be > 0");
  }

  IntegratorConfig tightened(double factor) const {
    IntegratorConfig c = *this;
    c.rtol /= factor;
    c.atol /= factor;
    return c;
  }
};

enum class IntegrationStatus {
  Completed,
  Diverged,            // ||y||_inf exceeded divergence_norm
  StepSizeUnderflow,   // controller asked for h < h_min
  StepBudgetExhausted,
  EventTerminated,
};

inline const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::Completed: return "Completed";
    case IntegrationStatus::Diverged: return "Diverged";
    case IntegrationStatus::StepSizeUnderflow: return "StepSizeUnderflow";
    case IntegrationStatus::StepBudgetExhausted: return "StepBudgetExhausted";
    case IntegrationStatus::EventTerminated: return "EventTerminated";
  }
  return "?";
}

/// Thrown by callers that need a completed integration.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(IntegrationStatus status, double last_time, const std::string& what)
      : std::runtime_error(what + " (" + to_string(status) + " at t=" + std::to_string(last_time) + ")"),
        status_(status),
        last_time_(last_time) {}
  IntegrationStatus status() const { return status_; }
  double last_time() const { return last_time_; }

 private:
  IntegrationStatus status_;
  double last_time_;
};

template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vec<Scalar>> states;
  std::vector<Vec<Scalar>> derivatives;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  Scalar final_step = 0;
  IntegrationStatus status = IntegrationStatus::Completed;

  bool completed() const {
    return status == IntegrationStatus::Completed || status == IntegrationStatus::EventTerminated;
  }
  Scalar last_time() const { return times.back(); }
  const Vec<Scalar>& last_state() const { return states.back(); }
};

enum class EventDirection { Rising, Falling, Any };

template <typename Scalar>
struct EventSpec {
  std::function<Scalar(Scalar, const Vec<Scalar>&)> g;
  EventDirection direction = EventDirection::Any;
  Scalar root_tol = Scalar(1e-12);
  bool terminal = false;
};

template <typename Scalar>
struct EventHit {
  std::size_t index;
  Scalar t;
  Vec<Scalar> y;
};

template <typename Scalar>
struct EventResult {
  Trajectory<Scalar> trajectory;
  std::vector<EventHit<Scalar>> hits;
};

namespace detail {

// Fehlberg tableau.
template <typename Scalar>
struct Rkf45Tableau {
  static constexpr Scalar c2 = Scalar(1) / 4, c3 = Scalar(3) / 8, c4 = Scalar(12) / 13,
                          c5 = Scalar(1), c6 = Scalar(1) / 2;
  static constexpr Scalar a21 = Scalar(1) / 4;
  static constexpr Scalar a31 = Scalar(3) / 32, a32 = Scalar(9) / 32;
  static constexpr Scalar a41 = Scalar(1932) / 2197, a42 = Scalar(-7200) / 2197,
                          a43 = Scalar(7296) / 2197;
  static constexpr Scalar a51 = Scalar(439) / 216, a52 = Scalar(-8), a53 = Scalar(3680) / 513,
                          a54 = Scalar(-845) / 4104;
  static constexpr Scalar a61 = Scalar(-8) / 27, a62 = Scalar(2), a63 = Scalar(-3544) / 2565,
                          a64 = Scalar(1859) / 4104, a65 = Scalar(-11) / 40;
  static constexpr Scalar b41 = Scalar(25) / 216, b43 = Scalar(1408) / 2565,
                          b44 = Scalar(2197) / 4104, b45 = Scalar(-1) / 5;
  static constexpr Scalar b51 = Scalar(16) / 135, b53 = Scalar(6656) / 12825,
                          b54 = Scalar(28561) / 56430, b55 = Scalar(-9) / 50, b56 = Scalar(2) / 55;
};

template <typename Scalar>
struct StepWork {
  Vec<Scalar> k2, k3, k4, k5, k6, tmp;
  explicit StepWork(Eigen::Index n) : k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n) {}
};

// One Fehlberg step from (t, y) with slope k1 = f(t, y). Writes the 4th-order
// result to y4 and the difference (5th - 4th) to err.
template <typename Scalar, typename Rhs>
void rkf45_step(Rhs& rhs, Scalar t, const Vec<Scalar>& y, const Vec<Scalar>& k1, Scalar h,
                StepWork<Scalar>& w, Vec<Scalar>& y4, Vec<Scalar>* err) {
  using T = Rkf45Tableau<Scalar>;
  w.tmp = y + h * (T::a21 * k1);
  rhs(t + T::c2 * h, w.tmp, w.k2);
  w.tmp = y + h * (T::a31 * k1 + T::a32 * w.k2);
  rhs(t + T::c3 * h, w.tmp, w.k3);
  w.tmp = y + h * (T::a41 * k1 + T::a42 * w.k2 + T::a43 * w.k3);
  rhs(t + T::c4 * h, w.tmp, w.k4);
  w.tmp = y + h * (T::a51 * k1 + T::a52 * w.k2 + T::a53 * w.k3 + T::a54 * w.k4);
  rhs(t + T::c5 * h, w.tmp, w.k5);
  w.tmp = y + h * (T::a61 * k1 + T::a62 * w.k2 + T::a63 * w.k3 + T::a64 * w.k4 + T::a65 * w.k5);
  rhs(t + T::c6 * h, w.tmp, w.k6);
  y4 = y + h * (T::b41 * k1 + T::b43 * w.k3 + T::b44 * w.k4 + T::b45 * w.k5);
  if (err) {
    *err = h * ((T::b51 - T::b41) * k1 + (T::b53 - T::b43) * w.k3 + (T::b54 - T::b44) * w.k4 +
                (T::b55 - T::b45) * w.k5 + T::b56 * w.k6);
  }
}

template <typename Scalar, typename Rhs>
Vec<Scalar> fifth_order_step(Rhs& rhs, Scalar t, const Vec<Scalar>& y, const Vec<Scalar>& k1,
                             Scalar h) {
  StepWork<Scalar> w(y.size());
  Vec<Scalar> y4(y.size()), err(y.size());
  rkf45_step(rhs, t, y, k1, h, w, y4, &err);
  return y4 + err;
}

}  // namespace detail

/// Quartic Hermite-type interpolant on one accepted step: matches the end
/// values, the end slopes and a half-step value taken with the 5th-order
/// formula (local error O(h^5)).
template <typename Scalar>
class DenseStep {
 public:
  template <typename Rhs>
  DenseStep(Rhs& rhs, Scalar t0, Scalar h, const Vec<Scalar>& y0, const Vec<Scalar>& f0,
            const Vec<Scalar>& y1, const Vec<Scalar>& f1)
      : t0_(t0), h_(h), y0_(y0), hf0_(h * f0) {
    const Vec<Scalar> ymid = detail::fifth_order_step(rhs, t0, y0, f0, h / 2);
    const Vec<Scalar> delta = y1 - y0 - hf0_;
    const Vec<Scalar> e = h * (f1 - f0);
    const Vec<Scalar> m = ymid - y0 - hf0_ / 2;
    c2_ = -5 * delta + e + 16 * m;
    c3_ = 14 * delta - 3 * e - 32 * m;
    c4_ = -8 * delta + 2 * e + 16 * m;
  }

  Vec<Scalar> operator()(Scalar t) const {
    const Scalar th = (t - t0_) / h_;
    return y0_ + th * (hf0_ + th * (c2_ + th * (c3_ + th * c4_)));
  }
  Scalar t0() const { return t0_; }
  Scalar t1() const { return t0_ + h_; }

 private:
  Scalar t0_, h_;
  Vec<Scalar> y0_, hf0_, c2_, c3_, c4_;
};

/// Interpolates a recorded trajectory at time t (t within the recorded span).
template <typename Scalar, typename Rhs>
Vec<Scalar> sample(Rhs& rhs, const Trajectory<Scalar>& traj, Scalar t) {
  if (traj.times.size() != traj.derivatives.size() || traj.times.size() < 2)
    throw std::invalid_argument("sample: trajectory has no recorded steps");
  if (t < traj.times.front() || t > traj.times.back())
    throw std::out_of_range("sample: time outside trajectory span");
  auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  std::size_t i = it == traj.times.end() ? traj.times.size() - 2
                                          : static_cast<std::size_t>(it - traj.times.begin()) - 1;
  i = std::min(i, traj.times.size() - 2);
  DenseStep<Scalar> step(rhs, traj.times[i], traj.times[i + 1] - traj.times[i], traj.states[i],
                         traj.derivatives[i], traj.states[i + 1], traj.derivatives[i + 1]);
  return step(t);
}

namespace detail {

template <typename Scalar>
bool crosses(Scalar g0, Scalar g1, EventDirection dir) {
  const bool rising = g0 < 0 && g1 >= 0;
  const bool falling = g0 > 0 && g1 <= 0;
  switch (dir) {
    case EventDirection::Rising: return rising;
    case EventDirection::Falling: return falling;
    case EventDirection::Any: return rising || falling;
  }
  return false;
}

// Root of g along the exact one-step map s -> y0 + 5th-order step of size s, seeded
// by the dense interpolant.
template <typename Scalar, typename Rhs>
std::pair<Scalar, Vec<Scalar>> locate_event(Rhs& rhs, const EventSpec<Scalar>& ev, Scalar t0,
                                            Scalar h, const Vec<Scalar>& y0,
                                            const Vec<Scalar>& f0, const Vec<Scalar>& y1,
                                            const Vec<Scalar>& f1, Scalar g0, Scalar g1) {
  StepWork<Scalar> w(y0.size());
  Vec<Scalar> ys(y0.size());
  auto step_map = [&](Scalar s) -> Vec<Scalar> {
    if (s <= 0) return y0;
    Vec<Scalar> e(y0.size());
    rkf45_step<Scalar>(rhs, t0, y0, f0, s, w, ys, &e);
    return ys + e;
  };
  auto phi = [&](Scalar s) -> Scalar {
    if (s >= h) return g1;
    return ev.g(t0 + s, step_map(s));
  };

  boost::math::tools::eps_tolerance<Scalar> tol(std::numeric_limits<Scalar>::digits - 3);
  Scalar lo = 0, hi = h, glo = g0, ghi = g1;

  // Seed: root of the interpolated event function, then shrink the bracket
  // on the step map around it.
  {
    DenseStep<Scalar> dense(rhs, t0, h, y0, f0, y1, f1);
    auto gd = [&](Scalar s) { return s <= 0 ? g0 : (s >= h ? g1 : ev.g(t0 + s, dense(t0 + s))); };
    std::uintmax_t iters = 60;
    try {
      auto br = boost::math::tools::toms748_solve(gd, Scalar(0), h, g0, g1, tol, iters);
      const Scalar guess = (br.first + br.second) / 2;
      const Scalar width = std::max(h * Scalar(1e-4), Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * (std::abs(t0) + h));
      const Scalar a = std::max(Scalar(0), guess - width), b = std::min(h, guess + width);
      const Scalar ga = phi(a), gb = phi(b);
      if (a > 0 && ((ga < 0 && g0 < 0) || (ga > 0 && g0 > 0))) { lo = a; glo = ga; }
      if (b < h && ((gb < 0 && g1 < 0) || (gb > 0 && g1 > 0))) { hi = b; ghi = gb; }
    } catch (const boost::math::evaluation_error&) {
    }
  }

  if (glo == 0) return {t0 + lo, step_map(lo)};
  if (ghi == 0) return {t0 + hi, hi >= h ? y1 : step_map(hi)};

  std::uintmax_t iters = 200;
  auto br = boost::math::tools::toms748_solve(phi, lo, hi, glo, ghi, tol, iters);
  // pick the bracket end with the smaller residual
  const Scalar ga = phi(br.first), gb = phi(br.second);
  const Scalar s = std::abs(ga) <= std::abs(gb) ? br.first : br.second;
  return {t0 + s, s >= h ? y1 : step_map(s)};
}

template <typename Scalar, typename Rhs>
EventResult<Scalar> integrate_impl(Rhs& rhs, const Vec<Scalar>& y0, Scalar t0, Scalar t1,
                                   const IntegratorConfig& cfg,
                                   const std::vector<EventSpec<Scalar>>& events) {
  using std::abs;
  cfg.validate();
  if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
  if (!y0.allFinite()) throw std::invalid_argument("integrate: initial state is not finite");

  const Eigen::Index n = y0.size();
  const Scalar rtol = Scalar(cfg.rtol), atol = Scalar(cfg.atol);
  const Scalar h_min = Scalar(cfg.h_min), h_max = Scalar(cfg.h_max);

  EventResult<Scalar> out;
  Trajectory<Scalar>& tr = out.trajectory;

  Scalar t = t0;
  Vec<Scalar> y = y0, f(n), ynew(n), err(n), fnew(n);
  rhs(t, y, f);

  auto record = [&](Scalar tt, const Vec<Scalar>& yy, const Vec<Scalar>& ff) {
    tr.times.push_back(tt);
    tr.states.push_back(yy);
    tr.derivatives.push_back(ff);
  };
  record(t, y, f);

  std::vector<Scalar> gprev(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) gprev[i] = events[i].g(t, y);

  StepWork<Scalar> work(n);
  Scalar h = std::min(Scalar(cfg.h_init), h_max);
  h = std::min(h, t1 - t);
  bool last_recorded = true;
  std::int64_t steps = 0;

  auto finish = [&](IntegrationStatus st) {
    if (!last_recorded) record(t, y, f);
    tr.status = st;
    tr.final_step = h;
  };

  while (t < t1) {
    if (steps >= cfg.max_steps) {
      finish(IntegrationStatus::StepBudgetExhausted);
      return out;
    }
    ++steps;
    const bool final_step = t + h >= t1;
    if (final_step) h = t1 - t;

    rkf45_step(rhs, t, y, f, h, work, ynew, &err);
    Scalar enorm = 0;
    bool finite = ynew.allFinite() && err.allFinite();
    if (finite) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar sc = atol + rtol * std::max(abs(y(i)), abs(ynew(i)));
        enorm = std::max(enorm, abs(err(i)) / sc);
      }
    }
    if (!finite || enorm > 1) {
      ++tr.rejected;
      const Scalar fac = finite ? std::clamp(Scalar(0.9) * std::pow(enorm, Scalar(-0.2)), Scalar(0.2), Scalar(5))
                                : Scalar(0.2);
      h *= fac;
      if (h < h_min) {
        finish(IntegrationStatus::StepSizeUnderflow);
        return out;
      }
      continue;
    }
    ynew += err;

    if (ynew.template lpNorm<Eigen::Infinity>() > Scalar(cfg.divergence_norm)) {
      finish(IntegrationStatus::Diverged);
      return out;
    }

    const Scalar tnew = final_step ? t1 : t + h;
    rhs(tnew, ynew, fnew);
    ++tr.accepted;

    // events on [t, tnew]
    std::size_t first = events.size();
    Scalar t_first = tnew;
    Vec<Scalar> y_first;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const Scalar gnew = events[i].g(tnew, ynew);
      if (crosses(gprev[i], gnew, events[i].direction)) {
        auto [te, ye] = locate_event(rhs, events[i], t, tnew - t, y, f, ynew, fnew, gprev[i], gnew);
        out.hits.push_back({i, te, ye});
        if (events[i].terminal && te <= t_first) {
          first = i;
          t_first = te;
          y_first = ye;
        }
      }
      gprev[i] = gnew;
    }
    if (first < events.size()) {
      // drop hits located after the terminal one
      std::erase_if(out.hits, [&](const EventHit<Scalar>& e) { return e.t > t_first; });
      t = t_first;
      y = y_first;
      rhs(t, y, f);
      last_recorded = false;
      finish(IntegrationStatus::EventTerminated);
      return out;
    }

    t = tnew;
    y.swap(ynew);
    f.swap(fnew);
    last_recorded = false;
    if (cfg.record_steps || t >= t1) {
      record(t, y, f);
      last_recorded = true;
    }

    const Scalar fac = enorm == 0 ? Scalar(5) : std::clamp(Scalar(0.9) * std::pow(enorm, Scalar(-0.2)), Scalar(0.2), Scalar(5));
    if (!final_step) h = std::min(h * fac, h_max);
    if (t < t1 && h < h_min) {
      finish(IntegrationStatus::StepSizeUnderflow);
      return out;
    }
  }
  finish(IntegrationStatus::Completed);
  return out;
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1. Early termination (divergence,
/// step underflow, budget) is reported through Trajectory::status.
template <typename Scalar, typename Rhs>
Trajectory<Scalar> integrate(Rhs&& rhs, const Vec<Scalar>& y0, Scalar t0, Scalar t1,
                             const IntegratorConfig& cfg) {
  return detail::integrate_impl<Scalar>(rhs, y0, t0, t1, cfg, {}).trajectory;
}

template <typename Scalar, typename Rhs>
EventResult<Scalar> integrate_with_events(Rhs&& rhs, const Vec<Scalar>& y0, Scalar t0,
                                          Scalar t_max, const IntegratorConfig& cfg,
                                          const std::vector<EventSpec<Scalar>>& events) {
  for (const auto& e : events)
    if (!(e.root_tol > 0)) throw std::invalid_argument("EventSpec: root_tol must be > 0");
  return detail::integrate_impl<Scalar>(rhs, y0, t0, t_max, cfg, events);
}

/// Fixed-step integration with the propagated 4th-order formula (for order checks).
template <typename Scalar, typename Rhs>
Vec<Scalar> integrate_fixed(Rhs&& rhs, const Vec<Scalar>& y0, Scalar t0, Scalar t1, int steps) {
  const Scalar h = (t1 - t0) / steps;
  Vec<Scalar> y = y0, f(y0.size()), ynew(y0.size());
  detail::StepWork<Scalar> w(y0.size());
  for (int i = 0; i < steps; ++i) {
    const Scalar t = t0 + i * h;
    rhs(t, y, f);
    detail::rkf45_step<Scalar>(rhs, t, y, f, h, w, ynew, nullptr);
    y.swap(ynew);
  }
  return y;
}

/// Wraps a state-typed right-hand side (State -> State) for the vector integrator.
template <typename State, typename F>
auto vector_rhs(F f) {
  using Scalar = std::remove_cvref_t<decltype(std::declval<State>().a)>;
  return [f](Scalar, const Vec<Scalar>& y, Vec<Scalar>& dy) {
    dy = f(State::from_vector(y)).to_vector();
  };
}

}  // namespace coldplasma
