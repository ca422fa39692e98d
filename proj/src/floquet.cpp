#include "coldplasma/floquet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "coldplasma/conserved.hpp"
#include "coldplasma/ode_core.hpp"

namespace coldplasma {

int dimension(VariationalSystem s) {
  switch (s) {
    case VariationalSystem::axisym2: return 2;
    case VariationalSystem::electrostatic4: return 4;
    case VariationalSystem::radial3: return 3;
    case VariationalSystem::full9: return 9;
  }
  return 0;
}

std::string_view to_string(VariationalSystem s) {
  switch (s) {
    case VariationalSystem::axisym2: return "axisym2";
    case VariationalSystem::electrostatic4: return "electrostatic4";
    case VariationalSystem::radial3: return "radial3";
    case VariationalSystem::full9: return "full9";
  }
  return "?";
}

VariationalSystem parse_variational_system(std::string_view name) {
  for (auto s : {VariationalSystem::axisym2, VariationalSystem::electrostatic4,
                 VariationalSystem::radial3, VariationalSystem::full9})
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown variational system '" + std::string(name) +
                              "' (expected axisym2, electrostatic4, radial3 or full9)");
}

std::string_view to_string(DominantClass c) {
  return c == DominantClass::real_pair ? "real-pair-dominant" : "complex-pair-dominant";
}

namespace {

Eigen::MatrixXd coefficient_matrix(VariationalSystem s, const AxisymState2<double>& base) {
  switch (s) {
    case VariationalSystem::axisym2: return variational_matrix_axisym(base);
    case VariationalSystem::electrostatic4: return variational_matrix_electrostatic(base);
    case VariationalSystem::radial3: return variational_matrix_radial(base);
    case VariationalSystem::full9: return variational_matrix_full(base);
  }
  throw std::logic_error("coefficient_matrix");
}

void check_A_star(double A_star) {
  if (!(A_star > 0 && A_star < 0.5))
    throw InvalidAmplitude("A_star must lie in (0, 1/2), got " + std::to_string(A_star));
  check_amplitude(A_star);
}

// Layout of the augmented state: a0, A0, int tr M, then `cols` tangent
// columns of length n stored column-major.
Trajectory<double> run_augmented(VariationalSystem system, double A_star, const Eigen::MatrixXd& X0,
                                 double t_end, const IntegratorConfig& cfg) {
  const Eigen::Index n = X0.rows(), cols = X0.cols();
  Vec<double> y0(3 + n * cols);
  y0(0) = 0;
  y0(1) = A_star;
  y0(2) = 0;
  y0.tail(n * cols) = Eigen::Map<const Eigen::VectorXd>(X0.data(), n * cols);

  auto rhs = [system, n, cols](double, const Vec<double>& y, Vec<double>& dy) {
    dy.resize(y.size());
    const AxisymState2<double> base{y(0), y(1)};
    const auto f = rhs_axisym(base);
    dy(0) = f.a;
    dy(1) = f.A;
    const Eigen::MatrixXd M = coefficient_matrix(system, base);
    dy(2) = M.trace();
    Eigen::Map<const Eigen::MatrixXd> X(y.data() + 3, n, cols);
    Eigen::Map<Eigen::MatrixXd> dX(dy.data() + 3, n, cols);
    dX.noalias() = M * X;
  };

  IntegratorConfig c = cfg;
  c.record_steps = false;
  // the tangent columns may grow large near A* -> 1/2; the base orbit is bounded
  c.divergence_norm = std::numeric_limits<double>::max();
  auto tr = integrate<double>(rhs, y0, 0.0, t_end, c);
  if (!tr.completed())
    throw IntegrationError(tr.status, tr.last_time(),
                           "monodromy integration for " + std::string(to_string(system)));
  return tr;
}

}  // namespace

MonodromyResult fundamental_matrix(VariationalSystem system, double A_star,
                                   const IntegratorConfig& cfg, int periods) {
  check_A_star(A_star);
  if (periods < 1) throw std::invalid_argument("fundamental_matrix: periods must be >= 1");
  const int n = dimension(system);

  MonodromyResult r;
  r.system = system;
  r.A_star = A_star;
  r.periods = periods;
  r.T = period_event(A_star, cfg);

  const auto tr = run_augmented(system, A_star, Eigen::MatrixXd::Identity(n, n), periods * r.T, cfg);
  const Vec<double>& y = tr.last_state();
  r.trace_integral = y(2);
  r.Psi_T = Eigen::Map<const Eigen::MatrixXd>(y.data() + 3, n, n);

  const auto eig = eigen_small<double>(r.Psi_T);
  r.multipliers = eig.eigenvalues;
  r.eig_backward_error = eig.backward_error;
  sort_by_modulus(r.multipliers);
  r.S = instability_measure(r.multipliers);
  r.det_residual = std::abs(r.Psi_T.determinant() - 1);
  return r;
}

Eigen::VectorXd propagate_tangent(VariationalSystem system, double A_star, const Eigen::VectorXd& v,
                                  const IntegratorConfig& cfg, int periods) {
  check_A_star(A_star);
  if (v.size() != dimension(system))
    throw std::invalid_argument("propagate_tangent: tangent has the wrong dimension");
  const double T = period_event(A_star, cfg);
  const auto tr = run_augmented(system, A_star, v, periods * T, cfg);
  return tr.last_state().tail(v.size());
}

double instability_measure(const Multipliers& m) {
  if (m.empty()) throw std::invalid_argument("instability_measure: no multipliers");
  double mx = 0;
  for (const auto& l : m) mx = std::max(mx, std::abs(l));
  return mx - 1;
}

double liouville_residual(const MonodromyResult& r) {
  return std::abs(r.Psi_T.determinant() - std::exp(r.trace_integral));
}

std::vector<double> asymptotic_multipliers(VariationalSystem system, double eps) {
  const double pi = std::numbers::pi, e2 = eps * eps;
  switch (system) {
    case VariationalSystem::electrostatic4: {
      const double k1 = std::sqrt(3.0) * pi / 6 * e2, k2 = std::sqrt(3.0) * pi / 2 * e2;
      return {1 + k2, 1 + k1, 1 - k1, 1 - k2};
    }
    case VariationalSystem::radial3: {
      const double k = std::sqrt(5.0) * pi / 3 * e2;
      return {1 + k, 1, 1 - k};
    }
    default:
      throw std::invalid_argument("asymptotic_multipliers: only electrostatic4 and radial3 have an expansion");
  }
}

DominantClass classify(const Multipliers& m) {
  if (m.empty()) throw std::invalid_argument("classify: no multipliers");
  return std::abs(m.front().imag()) > kComplexThreshold ? DominantClass::complex_pair
                                                        : DominantClass::real_pair;
}

std::vector<ScanRow> scan(VariationalSystem system, const std::vector<double>& grid,
                          const IntegratorConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<ScanRow> rows(grid.size());
  auto work = [&](std::size_t i) {
    ScanRow& row = rows[i];
    row.A_star = grid[i];
    try {
      const auto r = fundamental_matrix(system, grid[i], cfg);
      row.T = r.T;
      for (const auto& l : r.multipliers) row.lambda_abs.push_back(std::abs(l));
      row.S = r.S;
      row.cls = classify(r.multipliers);
      row.det_residual = r.det_residual;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(grid.size(), 1)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < grid.size(); i = next++) work(i);
    });
  pool.clear();  // joins
  return rows;
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start)
    throw std::invalid_argument("grid: need finite start <= stop and step > 0");
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw std::invalid_argument("grid: too many points");
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

}  // namespace coldplasma
