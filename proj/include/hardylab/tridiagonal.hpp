#pragma once

// Symmetric tridiagonal matrices and the symmetric-definite pencil
// eigensolver used for every spectral computation in the library.
//
// The k-th eigenvalue of K x = lambda B x (B positive definite) is located by
// bisection on the Sturm count: by Sylvester's law of inertia the number of
// negative pivots of the LDL^T factorisation of K - sigma B equals the number
// of eigenvalues below sigma. The eigenvector follows from inverse iteration
// at the converged shift. Both stages run on the diagonally scaled pencil
// D K D, D B D with D = diag(B)^(-1/2), which keeps graded meshes whose
// entries span many decades well conditioned.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "hardylab/error.hpp"

namespace hardylab {

struct SymTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off; // off(i) couples i and i+1

  SymTridiagonal() = default;
  explicit SymTridiagonal(Eigen::Index n)
      : diag(Eigen::VectorXd::Zero(n)),
        off(Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 1, 0))) {}

  Eigen::Index size() const { return diag.size(); }

  Eigen::VectorXd operator*(const Eigen::VectorXd &x) const {
    const Eigen::Index n = size();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = diag(i) * x(i);
      if (i > 0)
        s += off(i - 1) * x(i - 1);
      if (i + 1 < n)
        s += off(i) * x(i + 1);
      y(i) = s;
    }
    return y;
  }

  double quadratic(const Eigen::VectorXd &x) const {
    return x.dot((*this) * x);
  }

  /// Drops the last row and column.
  SymTridiagonal leading(Eigen::Index n) const {
    SymTridiagonal t;
    t.diag = diag.head(n);
    t.off = off.head(std::max<Eigen::Index>(n - 1, 0));
    return t;
  }

  Eigen::MatrixXd dense() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i, i) = diag(i);
      if (i + 1 < n)
        m(i, i + 1) = m(i + 1, i) = off(i);
    }
    return m;
  }
};

/// a*X + b*Y
inline SymTridiagonal combine(double a, const SymTridiagonal &x, double b,
                              const SymTridiagonal &y) {
  detail::require(x.size() == y.size(), "combine: size mismatch");
  SymTridiagonal t;
  t.diag = a * x.diag + b * y.diag;
  t.off = a * x.off + b * y.off;
  return t;
}

/// Number of eigenvalues of the pencil (K, B) strictly below sigma.
inline Eigen::Index sturm_count(const SymTridiagonal &k, const SymTridiagonal &b,
                                double sigma) {
  const Eigen::Index n = k.size();
  constexpr double pivmin = std::numeric_limits<double>::min();
  Eigen::Index neg = 0;
  double d = k.diag(0) - sigma * b.diag(0);
  for (Eigen::Index i = 0;; ++i) {
    if (std::abs(d) < pivmin)
      d = -pivmin;
    if (d < 0.0)
      ++neg;
    if (i + 1 == n)
      break;
    const double e = k.off(i) - sigma * b.off(i);
    d = k.diag(i + 1) - sigma * b.diag(i + 1) - e * e / d;
  }
  return neg;
}

/// True when every LDL^T pivot of T is positive.
inline bool is_positive_definite(const SymTridiagonal &t) {
  double d = t.diag(0);
  for (Eigen::Index i = 0;; ++i) {
    if (!(d > 0.0))
      return false;
    if (i + 1 == t.size())
      return true;
    d = t.diag(i + 1) - t.off(i) * t.off(i) / d;
  }
}

/// Solves T y = rhs for a general tridiagonal T (sub, diag, super) by
/// Gaussian elimination with partial pivoting. Returns false on an exactly
/// zero pivot.
inline bool solve_tridiagonal(Eigen::VectorXd sub, Eigen::VectorXd d,
                              Eigen::VectorXd sup, Eigen::VectorXd &rhs) {
  const Eigen::Index n = d.size();
  if (n == 1) {
    if (d(0) == 0.0)
      return false;
    rhs(0) /= d(0);
    return true;
  }
  Eigen::VectorXd sup2 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(d(i)) >= std::abs(sub(i))) {
      if (d(i) == 0.0)
        return false;
      const double f = sub(i) / d(i);
      d(i + 1) -= f * sup(i);
      rhs(i + 1) -= f * rhs(i);
      sub(i) = 0.0;
    } else {
      const double f = d(i) / sub(i);
      d(i) = sub(i);
      double tmp = d(i + 1);
      d(i + 1) = sup(i) - f * tmp;
      if (i + 2 < n) {
        sup2(i) = sup(i + 1);
        sup(i + 1) = -f * sup2(i);
      }
      sup(i) = tmp;
      tmp = rhs(i);
      rhs(i) = rhs(i + 1);
      rhs(i + 1) = tmp - f * rhs(i + 1);
    }
  }
  if (d(n - 1) == 0.0)
    return false;
  rhs(n - 1) /= d(n - 1);
  rhs(n - 2) = (rhs(n - 2) - sup(n - 2) * rhs(n - 1)) / d(n - 2);
  for (Eigen::Index i = n - 3; i >= 0; --i)
    rhs(i) = (rhs(i) - sup(i) * rhs(i + 1) - sup2(i) * rhs(i + 2)) / d(i);
  return true;
}

/// |T| |x| for the entrywise absolute values.
inline Eigen::VectorXd abs_product(const SymTridiagonal &t,
                                   const Eigen::VectorXd &x) {
  SymTridiagonal a;
  a.diag = t.diag.cwiseAbs();
  a.off = t.off.cwiseAbs();
  return a * x.cwiseAbs();
}

/// Solves T y = rhs by LDL^T without pivoting; false unless every pivot is
/// positive.
inline bool solve_definite(const Eigen::VectorXd &off, Eigen::VectorXd d,
                           Eigen::VectorXd &rhs) {
  const Eigen::Index n = d.size();
  Eigen::VectorXd l(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(d(i) > 0.0))
      return false;
    l(i) = off(i) / d(i);
    d(i + 1) -= l(i) * off(i);
    rhs(i + 1) -= l(i) * rhs(i);
  }
  if (!(d(n - 1) > 0.0))
    return false;
  rhs(n - 1) /= d(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i)
    rhs(i) = rhs(i) / d(i) - l(i) * rhs(i + 1);
  return true;
}

struct PencilEigen {
  double value = 0.0;
  Eigen::VectorXd vector; // B-normalised, largest component positive
  /// ||K x - lambda B x|| / || |K||x| + |lambda| |B||x| || on the scaled
  /// pencil (componentwise backward error)
  double residual = 0.0;
  int bisection_steps = 0;
};

struct PencilOptions {
  std::uint64_t seed = 0;
  int max_bisection = 4000;
  int max_inverse_iterations = 12;
  double residual_tol = 1e-8;
};

/// Eigenpair `index` (0 = smallest) of K x = lambda B x with B symmetric
/// positive definite. Throws SolverError on failure.
inline PencilEigen pencil_eigen(const SymTridiagonal &k, const SymTridiagonal &b,
                                Eigen::Index index = 0,
                                const PencilOptions &opt = {}) {
  const Eigen::Index n = k.size();
  detail::require(n >= 1 && b.size() == n, "pencil_eigen: size mismatch");
  detail::require(index >= 0 && index < n, "pencil_eigen: index out of range");
  if (!is_positive_definite(b))
    throw SolverError("pencil_eigen: right-hand matrix is not positive definite");

  // scaled pencil
  const Eigen::VectorXd s = b.diag.cwiseSqrt().cwiseInverse();
  SymTridiagonal ks = k, bs = b;
  ks.diag = k.diag.cwiseProduct(s).cwiseProduct(s);
  bs.diag = b.diag.cwiseProduct(s).cwiseProduct(s);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    ks.off(i) = k.off(i) * s(i) * s(i + 1);
    bs.off(i) = b.off(i) * s(i) * s(i + 1);
  }
  if (!ks.diag.allFinite() || !ks.off.allFinite())
    throw SolverError("pencil_eigen: non-finite matrix entries");

  // bracket [lo, hi] with count(lo) <= index < count(hi)
  const double guess = ks.diag.minCoeff();
  double step = std::max(1.0, std::abs(guess));
  double lo = guess - step, hi = guess + step;
  for (int it = 0; sturm_count(ks, bs, lo) > index; ++it) {
    if (it > 2000)
      throw SolverError("pencil_eigen: could not bracket from below");
    step *= 2.0;
    lo = guess - step;
  }
  step = std::max(1.0, std::abs(guess));
  for (int it = 0; sturm_count(ks, bs, hi) <= index; ++it) {
    if (it > 2000)
      throw SolverError("pencil_eigen: could not bracket from above");
    step *= 2.0;
    hi = guess + step;
  }

  PencilEigen out;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (; out.bisection_steps < opt.max_bisection; ++out.bisection_steps) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi ||
        hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi)))
      break;
    if (sturm_count(ks, bs, mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  // For the lowest eigenvalue the shift sits just below it, where K - shift B
  // is positive definite and an unpivoted LDL^T solve keeps the tiny
  // components of graded eigenvectors accurate.
  double margin = std::max(hi - lo, 1e-12 * std::max(1.0, std::abs(lo)));
  double shift = index == 0 ? lo - margin : lo + 0.5 * (hi - lo);

  // inverse iteration on the scaled pencil
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = unif(rng);
  x /= x.norm();

  double lambda = shift, res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_inverse_iterations; ++it) {
    Eigen::VectorXd rhs = bs * x;
    Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
    Eigen::VectorXd dia = ks.diag - shift * bs.diag;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      sub(i) = ks.off(i) - shift * bs.off(i);
    const bool solved = index == 0 ? solve_definite(sub, dia, rhs)
                                   : solve_tridiagonal(sub, dia, sub, rhs);
    if (!solved) {
      // shift hit an eigenvalue to working precision; back off
      margin *= 16.0;
      shift = index == 0 ? lo - margin
                         : shift - 4.0 * eps * std::max(1.0, std::abs(shift));
      continue;
    }
    if (!rhs.allFinite())
      throw SolverError("pencil_eigen: inverse iteration overflow");
    x = rhs / rhs.norm();
    const Eigen::VectorXd kx = ks * x, bx = bs * x;
    lambda = x.dot(kx) / x.dot(bx);
    res = (kx - lambda * bx).norm() /
          (abs_product(ks, x) + std::abs(lambda) * abs_product(bs, x)).norm();
    if (res <= 0.01 * opt.residual_tol && it >= 1)
      break;
  }
  if (!(res <= opt.residual_tol))
    throw SolverError("pencil_eigen: residual " + std::to_string(res) +
                      " above tolerance after inverse iteration");

  // back to original coordinates, B-normalised
  Eigen::VectorXd v = x.cwiseProduct(s);
  v /= std::sqrt(v.dot(b * v));
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0)
    v = -v;
  out.value = lambda;
  out.vector = std::move(v);
  out.residual = res;
  return out;
}

} // namespace hardylab
