#pragma once

// Piecewise-linear Galerkin forms against the radial measure:
//   A(u, v) = int u' v' dmu,  M(u, v) = int u v dmu,  S(u, v) = int u v / r^2 dmu.

#include <Eigen/Core>
#include <charconv>
#include <cmath>
#include <algorithm>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "hardylab/error.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/tridiagonal.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

enum class OuterBc { Dirichlet, Neumann };

inline std::string_view to_string(OuterBc bc) {
  return bc == OuterBc::Dirichlet ? "dirichlet" : "neumann";
}

inline OuterBc outer_bc_from_string(std::string_view s) {
  if (s == "dirichlet")
    return OuterBc::Dirichlet;
  if (s == "neumann")
    return OuterBc::Neumann;
  throw DomainError("unknown outer boundary condition '" + std::string(s) + "'");
}

struct AssemblyOptions {
  /// The singular mass uses min(1/r^2, potential_cap).
  double potential_cap = std::numeric_limits<double>::infinity();
  /// Overrides omega_{N-1} when set (NaN means 2 pi^(N/2)/Gamma(N/2)).
  double sphere_area = std::numeric_limits<double>::quiet_NaN();
};

/// Stiffness, mass and inverse-square mass on the active degrees of freedom.
/// The inner node carries the natural condition; a Dirichlet outer condition
/// removes the node at R.
struct DiscreteForms {
  RadialGrid grid;
  WeightSpec weight;
  OuterBc bc = OuterBc::Neumann;
  AssemblyOptions options;
  SymTridiagonal A, M, S;

  Eigen::Index dofs() const { return A.size(); }
};

inline DiscreteForms assemble(const RadialGrid &grid, const WeightSpec &w,
                              OuterBc bc, const AssemblyOptions &opt = {}) {
  detail::require(grid.dim == w.dim, "assemble: grid and weight dim differ");
  detail::require(grid.size() >= 2, "assemble: grid needs at least one cell");
  detail::require(opt.potential_cap > 0.0, "assemble: potential cap must be > 0");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const GaussRule rule = gauss_legendre(grid.quad_order);
  const double area =
      std::isnan(opt.sphere_area) ? sphere_area(grid.dim) : opt.sphere_area;
  const double np = grid.dim - 1.0;

  DiscreteForms f;
  f.grid = grid;
  f.weight = w;
  f.bc = bc;
  f.options = opt;
  f.A = SymTridiagonal(n);
  f.M = SymTridiagonal(n);
  f.S = SymTridiagonal(n);

  for (Eigen::Index c = 0; c + 1 < n; ++c) {
    const double a = grid.nodes[c], b = grid.nodes[c + 1];
    const double h = b - a;
    double stiff = 0.0, m00 = 0.0, m01 = 0.0, m11 = 0.0, s00 = 0.0, s01 = 0.0,
           s11 = 0.0;
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double r = 0.5 * (a + b) + 0.5 * h * rule.x[q];
      const double rho =
          0.5 * h * rule.w[q] * area * eval_weight(w, r) * std::pow(r, np);
      const double p0 = (b - r) / h, p1 = (r - a) / h;
      const double pot = std::min(1.0 / (r * r), opt.potential_cap);
      stiff += rho;
      m00 += rho * p0 * p0;
      m01 += rho * p0 * p1;
      m11 += rho * p1 * p1;
      s00 += rho * pot * p0 * p0;
      s01 += rho * pot * p0 * p1;
      s11 += rho * pot * p1 * p1;
    }
    stiff /= h * h;
    if (!std::isfinite(stiff) || !std::isfinite(m00 + m01 + m11) ||
        !std::isfinite(s00 + s01 + s11))
      throw DomainError("assemble: non-finite quadrature on cell " +
                        std::to_string(c) + " [" + std::to_string(a) + ", " +
                        std::to_string(b) + "]");
    f.A.diag(c) += stiff;
    f.A.diag(c + 1) += stiff;
    f.A.off(c) -= stiff;
    f.M.diag(c) += m00;
    f.M.diag(c + 1) += m11;
    f.M.off(c) += m01;
    f.S.diag(c) += s00;
    f.S.diag(c + 1) += s11;
    f.S.off(c) += s01;
  }
  if (bc == OuterBc::Dirichlet) {
    f.A = f.A.leading(n - 1);
    f.M = f.M.leading(n - 1);
    f.S = f.S.leading(n - 1);
  }
  return f;
}

/// Nodal interpolation on every grid node.
template <class F>
Eigen::VectorXd project(const RadialGrid &grid, const F &f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    v(i) = f(grid.nodes[i]);
    if (!std::isfinite(v(i)))
      throw DomainError("project: non-finite value at r = " +
                        std::to_string(grid.nodes[i]));
  }
  return v;
}

/// Nodal interpolation restricted to the active degrees of freedom.
template <class F>
Eigen::VectorXd project(const DiscreteForms &forms, const F &f) {
  return project(forms.grid, f).head(forms.dofs());
}

/// Pads an active-dof vector with the Dirichlet zero at R.
inline Eigen::VectorXd expand(const DiscreteForms &forms,
                              const Eigen::VectorXd &v) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(forms.grid.size()));
  full.head(v.size()) = v;
  return full;
}

/// int g(r, u(r), u'(r)) dmu for the piecewise-linear interpolant u of the
/// nodal vector v, by cellwise Gauss quadrature of order `order`.
template <class G>
double integrate_p1(const RadialGrid &grid, const WeightSpec &w,
                    const Eigen::VectorXd &v, const G &g, int order = 8) {
  detail::require(static_cast<std::size_t>(v.size()) == grid.size(),
                  "integrate_p1: vector size must match the grid");
  const GaussRule rule = gauss_legendre(order);
  const double np = grid.dim - 1.0;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double a = grid.nodes[c], b = grid.nodes[c + 1], h = b - a;
    const double slope = (v(c + 1) - v(c)) / h;
    total += gauss_panel(
        [&](double r) {
          const double u = v(c) + slope * (r - a);
          return g(r, u, slope) * eval_weight(w, r) * std::pow(r, np);
        },
        a, b, rule);
  }
  return sphere_area(grid.dim) * total;
}

namespace detail {

inline void append_double(std::string &out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general,
                           17);
  out.append(buf, res.ptr);
}

} // namespace detail

/// "row col value" per line, 0-based, both triangles, 17 significant digits.
inline void write_triplets(std::ostream &os, const SymTridiagonal &t) {
  std::string line;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(i - 1, 0);
         j <= std::min<Eigen::Index>(i + 1, t.size() - 1); ++j) {
      const double v = i == j ? t.diag(i) : t.off(std::min(i, j));
      line.clear();
      line += std::to_string(i);
      line += ' ';
      line += std::to_string(j);
      line += ' ';
      detail::append_double(line, v);
      line += '\n';
      os << line;
    }
  }
}

} // namespace hardylab
