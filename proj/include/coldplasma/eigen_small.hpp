#pragma once

// Eigenvalues of small dense real matrices: balancing, Householder reduction
// to upper Hessenberg form, then Francis double-shift QR with deflation of
// 1x1 and 2x2 blocks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace coldplasma {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class EigenNonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct EigenResult {
  std::vector<std::complex<Scalar>> eigenvalues;
  /// |tr M - sum lambda| / ||M||_F, a cheap a-posteriori accuracy indicator.
  Scalar backward_error = 0;
};

namespace detail {

// Parlett-Reinsch balancing with radix-2 scaling; similarity, so the
// spectrum is unchanged and rounding is exact.
template <typename Scalar>
void balance(MatX<Scalar>& a) {
  using std::abs;
  const Eigen::Index n = a.rows();
  const Scalar radix = 2, sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar r = 0, c = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) {
          c += abs(a(j, i));
          r += abs(a(i, j));
        }
      }
      if (c != 0 && r != 0) {
        Scalar g = r / radix, f = 1;
        const Scalar s = c + r;
        while (c < g) {
          f *= radix;
          c *= sqrdx;
        }
        g = r * radix;
        while (c > g) {
          f /= radix;
          c /= sqrdx;
        }
        if ((c + r) / f < Scalar(0.95) * s) {
          done = false;
          g = 1 / f;
          a.row(i) *= g;
          a.col(i) *= f;
        }
      }
    }
  }
}

template <typename Scalar>
void to_hessenberg(MatX<Scalar>& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = a.col(k).tail(n - k - 1);
    const Scalar alpha = v.norm();
    if (alpha == 0) continue;
    const Scalar beta = v(0) >= 0 ? -alpha : alpha;
    v(0) -= beta;
    const Scalar vn2 = v.squaredNorm();
    if (vn2 == 0) continue;
    // a <- P a P with P = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n-1
    auto rows = a.bottomRows(n - k - 1);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> w = (v.transpose() * rows) * (Scalar(2) / vn2);
    rows -= v * w;
    auto cols = a.rightCols(n - k - 1);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u = (cols * v) * (Scalar(2) / vn2);
    cols -= u * v.transpose();
    a(k + 1, k) = beta;
    a.col(k).tail(n - k - 2).setZero();
  }
}

template <typename Scalar>
void eig2x2(Scalar a, Scalar b, Scalar c, Scalar d, std::complex<Scalar>& l1,
            std::complex<Scalar>& l2) {
  using std::abs;
  using std::sqrt;
  const Scalar p = (a - d) / 2;
  const Scalar bc = b * c;
  const Scalar disc = p * p + bc;
  if (disc >= 0) {
    const Scalar z = p + std::copysign(sqrt(disc), p);
    l1 = d + z;
    l2 = z != 0 ? d - bc / z : d;
  } else {
    const Scalar im = sqrt(-disc);
    l1 = {d + p, im};
    l2 = {d + p, -im};
  }
}

// Householder reflector of size m (2 or 3) mapping x to a multiple of e1.
template <typename Scalar, int M>
bool reflector(const Eigen::Matrix<Scalar, M, 1>& x, Eigen::Matrix<Scalar, M, 1>& v, Scalar& tau) {
  const Scalar alpha = x.norm();
  if (alpha == 0) return false;
  v = x;
  v(0) += x(0) >= 0 ? alpha : -alpha;
  tau = Scalar(2) / v.squaredNorm();
  return true;
}

template <typename Scalar, int M>
void apply_reflector(MatX<Scalar>& h, Eigen::Index k, const Eigen::Matrix<Scalar, M, 1>& v,
                     Scalar tau, Eigen::Index lo, Eigen::Index hi) {
  // rows k..k+M-1, columns from max(lo, k-1) to hi
  const Eigen::Index c0 = std::max(lo, k - 1);
  auto rb = h.block(k, c0, M, hi - c0 + 1);
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> w = tau * (v.transpose() * rb);
  rb -= v * w;
  // columns k..k+M-1, rows lo .. min(k+M, hi)
  const Eigen::Index r1 = std::min(k + M, hi);
  auto cb = h.block(lo, k, r1 - lo + 1, M);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u = tau * (cb * v);
  cb -= u * v.transpose();
}

}  // namespace detail

/// All eigenvalues of a small real square matrix (n <= 9 in this project, but
/// nothing depends on that). Throws EigenNonConvergence after 100 n sweeps.
template <typename Scalar>
EigenResult<Scalar> eigen_small(const MatX<Scalar>& m) {
  using std::abs;
  using C = std::complex<Scalar>;
  if (m.rows() != m.cols()) throw std::invalid_argument("eigen_small: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("eigen_small: matrix has non-finite entries");

  const Eigen::Index n = m.rows();
  EigenResult<Scalar> out;
  out.eigenvalues.assign(static_cast<std::size_t>(n), C(0));
  if (n == 0) return out;

  MatX<Scalar> h = m;
  detail::balance(h);
  detail::to_hessenberg(h);

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar anorm = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = std::max<Eigen::Index>(i - 1, 0); j < n; ++j) anorm += abs(h(i, j));

  Eigen::Index hi = n - 1;
  int its = 0;
  long total = 0;
  const long budget = 100 * static_cast<long>(n);

  while (hi >= 0) {
    // find the start l of the unreduced block ending at hi
    Eigen::Index l = hi;
    for (; l > 0; --l) {
      Scalar s = abs(h(l - 1, l - 1)) + abs(h(l, l));
      if (s == 0) s = anorm;
      if (abs(h(l, l - 1)) <= eps * s) {
        h(l, l - 1) = 0;
        break;
      }
    }

    if (l == hi) {
      out.eigenvalues[hi] = h(hi, hi);
      --hi;
      its = 0;
      continue;
    }
    if (l == hi - 1) {
      detail::eig2x2(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi),
                     out.eigenvalues[hi - 1], out.eigenvalues[hi]);
      hi -= 2;
      its = 0;
      continue;
    }

    if (++total > budget)
      throw EigenNonConvergence("eigen_small: QR iteration did not converge within " +
                                std::to_string(budget) + " sweeps");

    // shifts from the trailing 2x2 block, with ad hoc exceptional shifts
    Scalar s, t;
    if (its == 10 || its == 20) {
      const Scalar w = abs(h(hi, hi - 1)) + abs(h(hi - 1, hi - 2));
      s = Scalar(1.5) * w;
      t = w * w;
    } else {
      s = h(hi - 1, hi - 1) + h(hi, hi);
      t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
    }
    ++its;

    Scalar x = h(l, l) * h(l, l) + h(l, l + 1) * h(l + 1, l) - s * h(l, l) + t;
    Scalar y = h(l + 1, l) * (h(l, l) + h(l + 1, l + 1) - s);
    Scalar z = h(l + 1, l) * h(l + 2, l + 1);

    for (Eigen::Index k = l; k <= hi - 2; ++k) {
      Eigen::Matrix<Scalar, 3, 1> v3, x3(x, y, z);
      Scalar tau;
      if (detail::reflector<Scalar, 3>(x3, v3, tau)) {
        detail::apply_reflector<Scalar, 3>(h, k, v3, tau, l, hi);
        if (k > l) h(k + 1, k - 1) = h(k + 2, k - 1) = 0;
      }
      x = h(k + 1, k);
      y = h(k + 2, k);
      if (k < hi - 2) z = h(k + 3, k);
    }
    Eigen::Matrix<Scalar, 2, 1> v2, x2(x, y);
    Scalar tau;
    if (detail::reflector<Scalar, 2>(x2, v2, tau)) {
      detail::apply_reflector<Scalar, 2>(h, hi - 1, v2, tau, l, hi);
      if (hi - 2 >= l) h(hi, hi - 2) = 0;
    }
  }

  Scalar sum = 0;
  for (const auto& e : out.eigenvalues) sum += e.real();
  const Scalar fro = m.norm();
  out.backward_error = fro > 0 ? abs(m.trace() - sum) / fro : abs(sum);
  return out;
}

template <typename Scalar, int R, int Cc>
EigenResult<Scalar> eigen_small(const Eigen::Matrix<Scalar, R, Cc>& m)
  requires(R != Eigen::Dynamic || Cc != Eigen::Dynamic)
{
  return eigen_small<Scalar>(MatX<Scalar>(m));
}

/// Orders by decreasing modulus; ties keep positive imaginary part first.
template <typename Scalar>
void sort_by_modulus(std::vector<std::complex<Scalar>>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& p, const auto& q) {
    const Scalar ap = std::abs(p), aq = std::abs(q);
    if (ap != aq) return ap > aq;
    return p.imag() > q.imag();
  });
}

}  // namespace coldplasma
