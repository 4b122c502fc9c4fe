#pragma once

// Graded radial meshes on (0, R] and radial integration against
// d mu = omega_{N-1} mu(r) r^(N-1) dr.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "hardylab/error.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

enum class Grading { Uniform, Geometric };

inline std::string_view to_string(Grading g) {
  return g == Grading::Uniform ? "uniform" : "geometric";
}

inline Grading grading_from_string(std::string_view s) {
  if (s == "uniform")
    return Grading::Uniform;
  if (s == "geometric")
    return Grading::Geometric;
  throw DomainError("unknown grading '" + std::string(s) + "'");
}

/// Nodes 0 < r_1 < ... < r_n = R. The origin is never a node.
struct RadialGrid {
  std::vector<double> nodes;
  Grading grading = Grading::Uniform;
  double ratio = 1.0; // r_{i+1}/r_i for geometric grading
  int quad_order = 4;
  int dim = 3;

  std::size_t size() const { return nodes.size(); }
  std::size_t cells() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  double r1() const { return nodes.front(); }
  double R() const { return nodes.back(); }
};

/// Surface area of the unit sphere in R^N, 2 pi^(N/2) / Gamma(N/2).
inline double sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

inline RadialGrid build_grid(double R, int n, Grading grading, double ratio,
                             int dim, int quad_order = 4) {
  detail::require(R > 0.0 && std::isfinite(R), "build_grid: R must be > 0");
  detail::require(n >= 2, "build_grid: need at least 2 nodes");
  detail::require(quad_order >= 2, "build_grid: quad_order must be >= 2");
  detail::require(dim >= 1, "build_grid: dim must be >= 1");
  RadialGrid g;
  g.grading = grading;
  g.quad_order = quad_order;
  g.dim = dim;
  g.nodes.resize(n);
  if (grading == Grading::Uniform) {
    g.ratio = 1.0;
    for (int i = 0; i < n; ++i)
      g.nodes[i] = R * double(i + 1) / double(n);
  } else {
    detail::require(ratio > 1.0, "build_grid: geometric ratio must be > 1");
    g.ratio = ratio;
    for (int i = 0; i < n; ++i)
      g.nodes[i] = R * std::pow(ratio, -double(n - 1 - i));
    detail::require(g.nodes.front() > 0.0,
                    "build_grid: innermost node underflows to 0");
  }
  g.nodes.back() = R;
  for (int i = 1; i < n; ++i)
    detail::require(g.nodes[i] > g.nodes[i - 1],
                    "build_grid: nodes not strictly increasing");
  return g;
}

/// Geometric ratio that places r_1 at `r1` with n nodes on (0, R].
inline double ratio_for_r1(double R, double r1, int n) {
  detail::require(r1 > 0.0 && r1 < R && n >= 2, "ratio_for_r1: bad arguments");
  return std::pow(R / r1, 1.0 / double(n - 1));
}

/// Nested refinement ladder: rung k has n_max / 2^(depth-1-k) nodes. With
/// geometric grading the ratio is shared, so every rung's node set is
/// contained in the next and r_1 shrinks geometrically; with uniform grading
/// the mesh width halves.
inline std::vector<RadialGrid> nested_ladder(double R, int n_max, int depth,
                                             Grading grading, double ratio,
                                             int dim, int quad_order = 4) {
  detail::require(depth >= 1, "nested_ladder: depth must be >= 1");
  detail::require(n_max % (1 << (depth - 1)) == 0,
                  "nested_ladder: n_max must be divisible by 2^(depth-1)");
  std::vector<RadialGrid> out;
  for (int k = 0; k < depth; ++k) {
    const int n = n_max >> (depth - 1 - k);
    out.push_back(build_grid(R, n, grading, ratio, dim, quad_order));
  }
  return out;
}

/// omega_{N-1} * sum over cells of Gauss quadrature of f(r) mu(r) r^(N-1).
/// The core (0, r_1) is not included.
template <class F>
double integrate_radial(const RadialGrid &grid, const WeightSpec &w,
                        const F &f) {
  detail::require(grid.dim == w.dim, "integrate_radial: dimension mismatch");
  const GaussRule rule = gauss_legendre(grid.quad_order);
  const double np = grid.dim - 1.0;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double a = grid.nodes[c], b = grid.nodes[c + 1];
    const double cell = gauss_panel(
        [&](double r) { return f(r) * eval_weight(w, r) * std::pow(r, np); },
        a, b, rule);
    if (!std::isfinite(cell))
      throw DomainError("integrate_radial: non-finite quadrature on cell [" +
                        std::to_string(a) + ", " + std::to_string(b) + "]");
    total += cell;
  }
  return sphere_area(grid.dim) * total;
}

} // namespace hardylab
