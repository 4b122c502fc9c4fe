#pragma once

// Sharp weighted Hardy constant: the constant curve c(alpha), its maximiser,
// the discrete best constant as a generalized eigenvalue, and executable
// versions of the estimate chain built on f_eps = (eps + r^2)^(alpha/2).

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hardylab/error.hpp"
#include "hardylab/forms.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/tridiagonal.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

/// -alpha (N - 2 + k2) - alpha^2
inline double c_of_alpha(int dim, double k2, double alpha) {
  return -alpha * (dim - 2.0 + k2) - alpha * alpha;
}

struct AlphaOpt {
  double alpha_o;
  double c_o;
};

/// Maximiser of c_of_alpha and the sharp constant ((N + k2 - 2)/2)^2.
inline AlphaOpt alpha_opt(int dim, double k2) {
  detail::require(k2 > 2.0 - dim, "alpha_opt: k2 must exceed 2 - N");
  const double half = 0.5 * (dim + k2 - 2.0);
  return {-half, half * half};
}

inline double sharp_constant(int dim, double k2) {
  return alpha_opt(dim, k2).c_o;
}

struct HardyRung {
  Eigen::Index n = 0;
  double r1 = 0.0;
  double c_star = 0.0;
  double residual = 0.0;
};

struct HardyReport {
  double c_star = 0.0;
  double c_theory = 0.0;
  double residual = 0.0;
  /// Richardson (Aitken delta-squared) estimate from the last three rungs;
  /// equals c_star when fewer rungs are available.
  double c_extrapolated = 0.0;
  bool monotone = true;
  std::vector<HardyRung> refinement_history;
  Eigen::VectorXd eigenvector;
};

/// Smallest c with c S x = (A + k1 M) x on Dirichlet forms.
inline HardyReport best_constant(const DiscreteForms &forms, double k1,
                                 std::uint64_t seed = 0) {
  detail::require(forms.bc == OuterBc::Dirichlet,
                  "best_constant: requires the Dirichlet outer condition");
  const SymTridiagonal lhs = combine(1.0, forms.A, k1, forms.M);
  if (k1 < 0.0 && sturm_count(lhs, forms.M, 0.0) > 0)
    throw DomainError("best_constant: A + k1 M is indefinite for k1 < 0");
  PencilOptions opt;
  opt.seed = seed;
  const PencilEigen eig = pencil_eigen(lhs, forms.S, 0, opt);

  HardyReport rep;
  rep.c_star = eig.value;
  rep.c_extrapolated = eig.value;
  rep.c_theory = sharp_constant(forms.weight.dim, forms.weight.k2);
  rep.residual = eig.residual;
  rep.refinement_history.push_back(
      {forms.dofs(), forms.grid.r1(), eig.value, eig.residual});
  rep.eigenvector = eig.vector;
  return rep;
}

/// Aitken delta-squared extrapolation of a converging triple; falls back to
/// the last value when the differences are not geometrically contracting.
inline double richardson_last_three(double c0, double c1, double c2) {
  const double d1 = c1 - c0, d2 = c2 - c1;
  if (d1 == 0.0 || d2 == 0.0)
    return c2;
  const double q = d2 / d1;
  if (!(q > 0.0 && q < 1.0))
    return c2;
  return c2 - d2 * d2 / (d2 - d1);
}

/// best_constant on every rung of a nested ladder (coarse to fine).
inline HardyReport hardy_ladder(const std::vector<RadialGrid> &ladder,
                                const WeightSpec &w, double k1,
                                std::uint64_t seed = 0) {
  detail::require(!ladder.empty(), "hardy_ladder: empty ladder");
  auto rungs = parallel_map(ladder.size(), [&](std::size_t i) {
    return best_constant(assemble(ladder[i], w, OuterBc::Dirichlet), k1, seed);
  });
  HardyReport rep = rungs.back();
  rep.refinement_history.clear();
  double worst = 0.0;
  for (const auto &r : rungs) {
    rep.refinement_history.push_back(r.refinement_history.front());
    worst = std::max(worst, r.residual);
  }
  rep.residual = worst;
  const auto &h = rep.refinement_history;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i].c_star > h[i - 1].c_star * (1.0 + 1e-9) + 1e-14)
      rep.monotone = false;
  if (h.size() >= 3)
    rep.c_extrapolated = richardson_last_three(
        h[h.size() - 3].c_star, h[h.size() - 2].c_star, h.back().c_star);
  return rep;
}

// ---------------------------------------------------------------------------
// f_eps estimate chain

struct FepsChain {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  /// c(alpha) int phi^2/r^2 dmu - k1 int phi^2 dmu, the eps -> 0 limit of lhs
  double fatou_limit = 0.0;
  H3Report h3;
};

/// Evaluates both sides of
///   int |phi'|^2 dmu >= c(alpha) int r^2 phi^2/(eps+r^2)^2 dmu
///                       - eps alpha (N+k2) int phi^2/(eps+r^2)^2 dmu
///                       - k1 int phi^2 dmu
/// for the interpolant of the nodal vector phi (zero at R). Refuses to run
/// when H3 fails at the quadrature radii.
inline FepsChain verify_feps_chain(const WeightSpec &w, const RadialGrid &grid,
                                   double alpha, double eps,
                                   const Eigen::VectorXd &phi) {
  detail::require(alpha < 0.0 && eps > 0.0,
                  "verify_feps_chain: need alpha < 0 and eps > 0");
  detail::require(static_cast<std::size_t>(phi.size()) == grid.size(),
                  "verify_feps_chain: phi must hold one value per node");
  detail::require(phi(phi.size() - 1) == 0.0,
                  "verify_feps_chain: phi must vanish at R");
  constexpr int order = 8;

  std::vector<double> radii;
  const GaussRule rule = gauss_legendre(order);
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double a = grid.nodes[c], b = grid.nodes[c + 1];
    for (double x : rule.x)
      radii.push_back(0.5 * (a + b) + 0.5 * (b - a) * x);
  }
  FepsChain out;
  out.h3 = check_h3(w, alpha, eps, radii);
  if (!out.h3.holds)
    throw DomainError("verify_feps_chain: H3 does not hold for this weight "
                      "and (alpha, eps, k1, k2)");

  const double c = c_of_alpha(w.dim, w.k2, alpha);
  const double i1 = integrate_p1(
      grid, w, phi,
      [&](double r, double u, double) {
        const double q = eps + r * r;
        return r * r * u * u / (q * q);
      },
      order);
  const double i2 = integrate_p1(
      grid, w, phi,
      [&](double r, double u, double) {
        const double q = eps + r * r;
        return u * u / (q * q);
      },
      order);
  const double mass =
      integrate_p1(grid, w, phi, [](double, double u, double) { return u * u; },
                   order);
  const double sing = integrate_p1(
      grid, w, phi, [](double r, double u, double) { return u * u / (r * r); },
      order);
  out.rhs = integrate_p1(
      grid, w, phi, [](double, double, double du) { return du * du; }, order);
  const double t1 = c * i1;
  const double t2 = -eps * alpha * (w.dim + w.k2) * i2;
  const double t3 = -w.k1 * mass;
  out.lhs = t1 + t2 + t3;
  out.gap = out.rhs - out.lhs;
  out.fatou_limit = c * sing - w.k1 * mass;
  out.tolerance = 1e-9 * (std::abs(out.rhs) + std::abs(t1) + std::abs(t2) +
                          std::abs(t3)) +
                  1e-300;
  if (out.gap < -out.tolerance)
    throw InvariantViolation("verify_feps_chain: estimate violated, gap = " +
                             std::to_string(out.gap));
  return out;
}

// ---------------------------------------------------------------------------
// Hardy-type inequalities from a positive supersolution

/// Radial profiles with closed-form Laplacian.
struct RadialProfile {
  enum class Kind { Power, Davies };
  Kind kind = Kind::Power;
  double exponent = 0.0; // a in r^a or (eps + r^2)^(a/2)
  double eps = 0.0;

  static RadialProfile power(double a) { return {Kind::Power, a, 0.0}; }
  static RadialProfile davies(double a, double eps) {
    return {Kind::Davies, a, eps};
  }

  double value(double r) const {
    return kind == Kind::Power ? std::pow(r, exponent)
                               : std::pow(eps + r * r, 0.5 * exponent);
  }

  /// -Delta f / f in R^N
  double minus_laplacian_ratio(double r, int dim) const {
    const double a = exponent;
    if (kind == Kind::Power)
      return -a * (dim - 2.0 + a) / (r * r);
    const double q = eps + r * r;
    return -(a * (dim - 2.0 + a) * r * r + a * eps * dim) / (q * q);
  }
};

struct HardyTypeResult {
  bool holds = false;
  bool pointwise_holds = false;
  /// largest V + Delta f / f over the quadrature radii
  double worst_pointwise = 0.0;
  /// int |phi'|^2 dx - int V phi^2 dx
  double margin = 0.0;
};

/// Checks -Delta f/f >= V pointwise and then int V phi^2 dx <= int |phi'|^2 dx
/// for the supplied nodal phi (unweighted measure).
template <class Potential>
HardyTypeResult hardy_type_check(const RadialGrid &grid,
                                 const RadialProfile &f, const Potential &V,
                                 const Eigen::VectorXd &phi) {
  detail::require(static_cast<std::size_t>(phi.size()) == grid.size(),
                  "hardy_type_check: phi must hold one value per node");
  for (double r : grid.nodes) {
    const double fv = f.value(r);
    if (!(fv > 0.0) || !std::isfinite(fv))
      throw DomainError("hardy_type_check: f must be positive on the grid");
  }
  detail::require(grid.dim >= 3, "hardy_type_check: dim must be >= 3");
  const WeightSpec lebesgue = WeightSpec::constant(grid.dim);
  constexpr int order = 8;
  const GaussRule rule = gauss_legendre(order);

  HardyTypeResult out;
  out.pointwise_holds = true;
  out.worst_pointwise = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double a = grid.nodes[c], b = grid.nodes[c + 1];
    for (double x : rule.x) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * x;
      const double lhs = f.minus_laplacian_ratio(r, grid.dim);
      const double v = V(r);
      const double excess = v - lhs;
      out.worst_pointwise = std::max(out.worst_pointwise, excess);
      if (excess > 1e-12 * (std::abs(v) + std::abs(lhs)))
        out.pointwise_holds = false;
    }
  }
  const double grad = integrate_p1(
      grid, lebesgue, phi, [](double, double, double du) { return du * du; },
      order);
  const double pot = integrate_p1(
      grid, lebesgue, phi, [&](double r, double u, double) { return V(r) * u * u; },
      order);
  out.margin = grad - pot;
  const double tol = 1e-9 * (std::abs(grad) + std::abs(pot));
  out.holds = out.pointwise_holds && out.margin >= -tol;
  return out;
}

} // namespace hardylab
