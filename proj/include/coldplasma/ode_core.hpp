#pragma once

// Affine cold-plasma ODE hierarchy.
//
// A planar affine solution V = Q x, E = R x, B = (0, 0, Bz) with
//   Q = [a b; c d],  R = [A B; C D]
// obeys  Q' + Q^2 - Bz L Q + R = 0,  R' = (1 - tr R) Q,  Bz' = tr(L R),
// with L the rotation generator [0 -1; 1 0]. The reduced systems below are
// invariant submanifolds of that 9-component flow.

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace coldplasma {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Full planar state, stored as (a, b, c, d, A, B, C, D, Bz).
template <typename Scalar>
struct PlasmaState9 {
  static constexpr int dim = 9;
  using Vector = Eigen::Matrix<Scalar, dim, 1>;

  Scalar a{}, b{}, c{}, d{};
  Scalar A{}, B{}, C{}, D{};
  Scalar Bz{};

  Vector to_vector() const {
    Vector v;
    v << a, b, c, d, A, B, C, D, Bz;
    return v;
  }
  template <typename Derived>
  static PlasmaState9 from_vector(const Eigen::MatrixBase<Derived>& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8)};
  }
  bool is_finite() const { return to_vector().allFinite(); }
};

/// Electrostatic subsystem (b = c = B = C = Bz = 0), stored as (a, d, A, D).
template <typename Scalar>
struct ElectrostaticState4 {
  static constexpr int dim = 4;
  using Vector = Eigen::Matrix<Scalar, dim, 1>;

  Scalar a{}, d{}, A{}, D{};

  Vector to_vector() const {
    Vector v;
    v << a, d, A, D;
    return v;
  }
  template <typename Derived>
  static ElectrostaticState4 from_vector(const Eigen::MatrixBase<Derived>& v) {
    return {v(0), v(1), v(2), v(3)};
  }
  bool is_finite() const { return to_vector().allFinite(); }
};

/// Axisymmetric electrostatic subsystem V = a r, E = A r, stored as (a, A).
template <typename Scalar>
struct AxisymState2 {
  static constexpr int dim = 2;
  using Vector = Eigen::Matrix<Scalar, dim, 1>;

  Scalar a{}, A{};

  Vector to_vector() const { return Vector(a, A); }
  template <typename Derived>
  static AxisymState2 from_vector(const Eigen::MatrixBase<Derived>& v) {
    return {v(0), v(1)};
  }
  bool is_finite() const { return to_vector().allFinite(); }
};

/// Radially symmetric subsystem V = a r + c r_perp, E = A r + C r_perp with
/// r_perp = (x2, -x1); stored as (a, c, A, C, Bz).
template <typename Scalar>
struct RadialState5 {
  static constexpr int dim = 5;
  using Vector = Eigen::Matrix<Scalar, dim, 1>;

  Scalar a{}, c{}, A{}, C{}, Bz{};

  Vector to_vector() const {
    Vector v;
    v << a, c, A, C, Bz;
    return v;
  }
  template <typename Derived>
  static RadialState5 from_vector(const Eigen::MatrixBase<Derived>& v) {
    return {v(0), v(1), v(2), v(3), v(4)};
  }
  bool is_finite() const { return to_vector().allFinite(); }
};

// ---------------------------------------------------------------------------
// Right-hand sides. Each returns the time derivative in the same layout.

template <typename Scalar>
PlasmaState9<Scalar> rhs_full(const PlasmaState9<Scalar>& s) {
  const Scalar n = Scalar(1) - s.A - s.D;
  PlasmaState9<Scalar> r;
  r.a = -(s.a * s.a + s.b * s.c) - s.Bz * s.c - s.A;
  r.b = -s.b * (s.a + s.d) - s.Bz * s.d - s.B;
  r.c = -s.c * (s.a + s.d) + s.Bz * s.a - s.C;
  r.d = -(s.d * s.d + s.b * s.c) + s.Bz * s.b - s.D;
  r.A = n * s.a;
  r.B = n * s.b;
  r.C = n * s.c;
  r.D = n * s.d;
  r.Bz = s.B - s.C;
  return r;
}

template <typename Scalar>
ElectrostaticState4<Scalar> rhs_electrostatic(const ElectrostaticState4<Scalar>& s) {
  const Scalar n = Scalar(1) - s.A - s.D;
  return {-s.a * s.a - s.A, -s.d * s.d - s.D, n * s.a, n * s.d};
}

template <typename Scalar>
AxisymState2<Scalar> rhs_axisym(const AxisymState2<Scalar>& s) {
  return {-s.A - s.a * s.a, s.a - Scalar(2) * s.A * s.a};
}

template <typename Scalar>
RadialState5<Scalar> rhs_radial(const RadialState5<Scalar>& s) {
  const Scalar n = Scalar(1) - Scalar(2) * s.A;
  RadialState5<Scalar> r;
  r.a = -s.a * s.a + s.c * s.c - s.A + s.Bz * s.c;
  r.c = Scalar(-2) * s.c * s.a - s.C - s.Bz * s.a;
  r.A = n * s.a;
  r.C = n * s.c;
  r.Bz = Scalar(2) * s.C;
  return r;
}

// ---------------------------------------------------------------------------
// Embeddings and projections.

/// Q = [a c; -c a], R = [A C; -C A].
template <typename Scalar>
PlasmaState9<Scalar> embed_radial(const RadialState5<Scalar>& s) {
  return {s.a, s.c, -s.c, s.a, s.A, s.C, -s.C, s.A, s.Bz};
}

template <typename Scalar>
PlasmaState9<Scalar> embed_electrostatic(const ElectrostaticState4<Scalar>& s) {
  PlasmaState9<Scalar> r;
  r.a = s.a;
  r.d = s.d;
  r.A = s.A;
  r.D = s.D;
  return r;
}

template <typename Scalar>
ElectrostaticState4<Scalar> embed_axisym(const AxisymState2<Scalar>& s) {
  return {s.a, s.a, s.A, s.A};
}

template <typename Scalar>
RadialState5<Scalar> axisym_to_radial(const AxisymState2<Scalar>& s) {
  return {s.a, Scalar(0), s.A, Scalar(0), Scalar(0)};
}

template <typename Scalar>
ElectrostaticState4<Scalar> project_electrostatic(const PlasmaState9<Scalar>& s) {
  return {s.a, s.d, s.A, s.D};
}

template <typename Scalar>
AxisymState2<Scalar> project_axisym(const ElectrostaticState4<Scalar>& s) {
  return {s.a, s.A};
}

template <typename Scalar>
RadialState5<Scalar> project_radial(const PlasmaState9<Scalar>& s) {
  return {s.a, s.b, s.A, s.B, s.Bz};
}

// ---------------------------------------------------------------------------
// Density n = 1 - tr R. States with n <= 0 are flagged, never rejected.

template <typename Scalar>
Scalar density(const PlasmaState9<Scalar>& s) {
  return Scalar(1) - s.A - s.D;
}
template <typename Scalar>
Scalar density(const ElectrostaticState4<Scalar>& s) {
  return Scalar(1) - s.A - s.D;
}
template <typename Scalar>
Scalar density(const AxisymState2<Scalar>& s) {
  return Scalar(1) - Scalar(2) * s.A;
}
template <typename Scalar>
Scalar density(const RadialState5<Scalar>& s) {
  return Scalar(1) - Scalar(2) * s.A;
}

template <typename State>
bool is_valid(const State& s) {
  return s.is_finite() && density(s) > 0;
}

// ---------------------------------------------------------------------------
// Linearization at the equilibrium Q = R = 0, Bz = Bz0.

template <typename Scalar>
struct EquilibriumSpectrum {
  std::array<std::complex<Scalar>, 5> eigenvalues;
};

/// lambda = +-(1/2) sqrt(-4 - 2 Bz0^2 +- 2 sqrt(Bz0^4 + 4 Bz0^2)), each pair
/// of double multiplicity in the full system, plus lambda = 0. Both radicands
/// are negative for every real Bz0, so the result is written directly as
/// purely imaginary values.
template <typename Scalar>
EquilibriumSpectrum<Scalar> equilibrium_spectrum(Scalar bz0) {
  using std::sqrt;
  const Scalar b2 = bz0 * bz0;
  const Scalar root = sqrt(b2 * b2 + Scalar(4) * b2);
  const Scalar fast = sqrt(Scalar(4) + Scalar(2) * b2 + Scalar(2) * root) / Scalar(2);
  // 4 + 2 b2 - 2 root = 16 / (4 + 2 b2 + 2 root), avoids cancellation for large |Bz0|
  const Scalar slow = sqrt(Scalar(16) / (Scalar(4) + Scalar(2) * b2 + Scalar(2) * root)) / Scalar(2);
  using C = std::complex<Scalar>;
  return {{C(0, fast), C(0, -fast), C(0, slow), C(0, -slow), C(0, 0)}};
}

// ---------------------------------------------------------------------------
// Jacobians and variational systems.

/// Analytic Jacobian of rhs_full, rows and columns in (a,b,c,d,A,B,C,D,Bz) order.
template <typename Scalar>
Eigen::Matrix<Scalar, 9, 9> jacobian_full(const PlasmaState9<Scalar>& s) {
  enum { a, b, c, d, A, B, C, D, Bz };
  Eigen::Matrix<Scalar, 9, 9> J = Eigen::Matrix<Scalar, 9, 9>::Zero();
  const Scalar n = Scalar(1) - s.A - s.D;

  J(a, a) = Scalar(-2) * s.a;
  J(a, b) = -s.c;
  J(a, c) = -s.b - s.Bz;
  J(a, A) = -1;
  J(a, Bz) = -s.c;

  J(b, a) = -s.b;
  J(b, b) = -(s.a + s.d);
  J(b, d) = -s.b - s.Bz;
  J(b, B) = -1;
  J(b, Bz) = -s.d;

  J(c, a) = -s.c + s.Bz;
  J(c, c) = -(s.a + s.d);
  J(c, d) = -s.c;
  J(c, C) = -1;
  J(c, Bz) = s.a;

  J(d, b) = -s.c + s.Bz;
  J(d, c) = -s.b;
  J(d, d) = Scalar(-2) * s.d;
  J(d, D) = -1;
  J(d, Bz) = s.b;

  const Scalar q[4] = {s.a, s.b, s.c, s.d};
  for (int k = 0; k < 4; ++k) {
    J(A + k, a + k) = n;
    J(A + k, A) = -q[k];
    J(A + k, D) = -q[k];
  }

  J(Bz, B) = 1;
  J(Bz, C) = -1;
  return J;
}

/// Jacobian of rhs_axisym, (a, A) ordering.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> jacobian_axisym(const AxisymState2<Scalar>& s) {
  Eigen::Matrix<Scalar, 2, 2> J;
  J << Scalar(-2) * s.a, Scalar(-1),
       Scalar(1) - Scalar(2) * s.A, Scalar(-2) * s.a;
  return J;
}

/// Coefficient matrix of the axisymmetric variational system, tangent (a1, A1).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> variational_matrix_axisym(const AxisymState2<Scalar>& base) {
  Eigen::Matrix<Scalar, 2, 2> M;
  M << Scalar(-2) * base.a, Scalar(-1),
       Scalar(1) - Scalar(2) * base.A, Scalar(-2) * base.a;
  return M;
}

/// Electrostatic variational system along an axisymmetric base orbit, with
/// tangent (A1, a1, delta1, sigma1) where delta = D - A and sigma = d - a.
/// The (delta1, sigma1) block does not see (A1, a1).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> variational_matrix_electrostatic(const AxisymState2<Scalar>& base) {
  const Scalar a0 = base.a;
  const Scalar n0 = Scalar(1) - Scalar(2) * base.A;
  Eigen::Matrix<Scalar, 4, 4> M;
  M << Scalar(-2) * a0, n0, -a0, Scalar(0),
       Scalar(-1), Scalar(-2) * a0, Scalar(0), Scalar(0),
       Scalar(0), Scalar(0), Scalar(0), n0,
       Scalar(0), Scalar(0), Scalar(-1), Scalar(-2) * a0;
  return M;
}

/// Non-electrostatic radial variational system, tangent (C1, c1, Bz1).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> variational_matrix_radial(const AxisymState2<Scalar>& base) {
  const Scalar a0 = base.a;
  const Scalar n0 = Scalar(1) - Scalar(2) * base.A;
  Eigen::Matrix<Scalar, 3, 3> M;
  M << Scalar(0), n0, Scalar(0),
       Scalar(-1), Scalar(-2) * a0, -a0,
       Scalar(2), Scalar(0), Scalar(0);
  return M;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> variational_rhs_axisym(const AxisymState2<Scalar>& base,
                                                    const Eigen::Matrix<Scalar, 2, 1>& tangent) {
  return variational_matrix_axisym(base) * tangent;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> variational_rhs_electrostatic(
    const AxisymState2<Scalar>& base, const Eigen::Matrix<Scalar, 4, 1>& tangent) {
  return variational_matrix_electrostatic(base) * tangent;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> variational_rhs_radial(const AxisymState2<Scalar>& base,
                                                   const Eigen::Matrix<Scalar, 3, 1>& tangent) {
  return variational_matrix_radial(base) * tangent;
}

/// Jacobian of rhs_full along the embedded axisymmetric orbit.
template <typename Scalar>
Eigen::Matrix<Scalar, 9, 9> variational_matrix_full(const AxisymState2<Scalar>& base) {
  return jacobian_full(embed_electrostatic(embed_axisym(base)));
}

}  // namespace coldplasma
