#pragma once

// Bottom of the spectrum of -(L + c/r^2), the phi_eps witness family for
// c above the sharp constant, and the bounded/divergent dichotomy scan.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>

#include "hardylab/error.hpp"
#include "hardylab/forms.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/tridiagonal.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

struct SpectrumPoint {
  Eigen::Index n = 0;
  double r1 = 0.0;
  double lambda1 = 0.0;
  double residual = 0.0;
};

struct SpectrumReport {
  double c = 0.0;
  double lambda1 = 0.0;
  double residual = 0.0;
  Eigen::Index n = 0;
  double r1 = 0.0;
  std::vector<SpectrumPoint> trend;
  Eigen::VectorXd eigenvector;
};

/// Smallest lambda with (A - c S) x = lambda M x.
inline SpectrumReport lambda1(const DiscreteForms &forms, double c,
                              std::uint64_t seed = 0) {
  detail::require(c >= 0.0 && std::isfinite(c), "lambda1: c must be >= 0");
  PencilOptions opt;
  opt.seed = seed;
  const PencilEigen eig =
      pencil_eigen(combine(1.0, forms.A, -c, forms.S), forms.M, 0, opt);
  SpectrumReport rep;
  rep.c = c;
  rep.lambda1 = eig.value;
  rep.residual = eig.residual;
  rep.n = forms.dofs();
  rep.r1 = forms.grid.r1();
  rep.trend.push_back({rep.n, rep.r1, rep.lambda1, rep.residual});
  rep.eigenvector = eig.vector;
  return rep;
}

/// lambda1 on every rung of a ladder; the report describes the finest rung
/// and carries the whole trend.
inline SpectrumReport lambda1_ladder(const std::vector<RadialGrid> &ladder,
                                     const WeightSpec &w, double c, OuterBc bc,
                                     std::uint64_t seed = 0) {
  detail::require(!ladder.empty(), "lambda1_ladder: empty ladder");
  auto rungs = parallel_map(ladder.size(), [&](std::size_t i) {
    return lambda1(assemble(ladder[i], w, bc), c, seed);
  });
  SpectrumReport rep = rungs.back();
  rep.trend.clear();
  for (const auto &r : rungs) {
    rep.trend.push_back(r.trend.front());
    rep.residual = std::max(rep.residual, r.residual);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// phi_eps witness

struct EtaRange {
  double eta_min;
  double eta_max;
  double midpoint() const { return 0.5 * (eta_min + eta_max); }
  bool contains(double eta) const { return eta > eta_min && eta < eta_max; }
};

/// Open interval max(-sqrt c, -(N+k2)/2) < eta < min(-(N+k2-2)/2, 0);
/// non-empty exactly when c exceeds the sharp constant.
inline EtaRange eta_range(int dim, double k2, double c) {
  detail::require(c > 0.0, "eta_range: c must be > 0");
  detail::require(k2 > 2.0 - dim, "eta_range: k2 must exceed 2 - N");
  const double lo = std::max(-std::sqrt(c), -0.5 * (dim + k2));
  const double hi = std::min(-0.5 * (dim + k2 - 2.0), 0.0);
  if (!(lo < hi))
    throw DomainError("eta_range: empty for c = " + std::to_string(c) +
                      " (c must exceed the sharp constant " +
                      std::to_string(sharp_constant(dim, k2)) + ")");
  return {lo, hi};
}

/// theta = 1 on [0,1], cos^2(pi (r-1)/2) on (1,2), 0 beyond.
inline double cutoff(double r) {
  if (r <= 1.0)
    return 1.0;
  if (r >= 2.0)
    return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * (r - 1.0));
  return c * c;
}

/// sup |theta'|
inline constexpr double cutoff_gradient_sup = 0.5 * std::numbers::pi;

struct BlowupWitness {
  double c = 0.0;
  double eta = 0.0;
  std::vector<double> eps_list;
  std::vector<double> quotients;
  double C1 = 0.0;
  std::vector<double> C2_eps;
  /// int_{B1} (eps+r)^(2 eta) [eta^2/(eps+r)^2 - c/r^2] dmu + C1
  std::vector<double> numerator_bounds;
  std::vector<double> bounds;
};

/// Rayleigh quotients of the interpolated phi_eps = (eps + r)^eta theta(r)
/// under (A - c S, M), together with the continuum bound built from C1 and
/// C_{2,eps}.
inline BlowupWitness blowup_witness(const DiscreteForms &forms, double c,
                                    double eta,
                                    const std::vector<double> &eps_list) {
  const WeightSpec &w = forms.weight;
  detail::require(forms.grid.R() >= 2.0,
                  "blowup_witness: grid must reach r = 2 (support of theta)");
  detail::require(!eps_list.empty(), "blowup_witness: empty eps_list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    detail::require(eps_list[i] > 0.0, "blowup_witness: eps must be > 0");
    if (i > 0)
      detail::require(eps_list[i] < eps_list[i - 1],
                      "blowup_witness: eps_list must be decreasing");
  }
  const EtaRange range = eta_range(w.dim, w.k2, c);
  if (!range.contains(eta))
    throw DomainError("blowup_witness: eta outside the admissible range");

  const double area = sphere_area(w.dim);
  const double np = w.dim - 1.0;
  auto dmu = [&](double r) { return area * eval_weight(w, r) * std::pow(r, np); };

  BlowupWitness out;
  out.c = c;
  out.eta = eta;
  out.eps_list = eps_list;
  const double annulus = uniform_gauss(dmu, 1.0, 2.0, 64, 8);
  out.C1 = (2.0 * eta * eta +
            2.0 * cutoff_gradient_sup * cutoff_gradient_sup) *
           annulus;

  const SymTridiagonal K = combine(1.0, forms.A, -c, forms.S);
  for (double eps : eps_list) {
    auto phi = [&](double r) { return std::pow(eps + r, eta) * cutoff(r); };
    const Eigen::VectorXd v = project(forms, phi);
    out.quotients.push_back(K.quadratic(v) / forms.M.quadratic(v));

    const double c2 = uniform_gauss(
        [&](double r) { return phi(r) * phi(r) * dmu(r); }, 1.0, 2.0, 64, 8);
    const double inner = geometric_gauss(
        [&](double r) {
          const double s = eps + r;
          return std::pow(s, 2.0 * eta) * (eta * eta / (s * s) - c / (r * r)) *
                 dmu(r);
        },
        1e-40, 1.0, 1.2, 8);
    const double num = inner + out.C1;
    // a negative numerator may only be divided by the full denominator
    double denom = c2;
    if (num < 0.0)
      denom = c2 + geometric_gauss(
                       [&](double r) { return phi(r) * phi(r) * dmu(r); },
                       1e-40, 1.0, 1.2, 8);
    out.C2_eps.push_back(c2);
    out.numerator_bounds.push_back(num);
    out.bounds.push_back(num / denom);
  }

  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double b = out.bounds[i];
    if (out.quotients[i] > b + 1e-9 * (1.0 + std::abs(b)))
      throw InvariantViolation("blowup_witness: quotient exceeds its bound at "
                               "eps = " + std::to_string(eps_list[i]));
  }
  if (c > sharp_constant(w.dim, w.k2))
    for (std::size_t i = 1; i < out.quotients.size(); ++i)
      if (!(out.quotients[i] < out.quotients[i - 1]))
        throw InvariantViolation(
            "blowup_witness: quotients not strictly decreasing along eps_list");
  return out;
}

// ---------------------------------------------------------------------------
// Dichotomy

enum class Trend { Bounded, Divergent, Inconclusive };

inline std::string_view to_string(Trend t) {
  switch (t) {
  case Trend::Bounded:
    return "bounded";
  case Trend::Divergent:
    return "divergent";
  case Trend::Inconclusive:
    return "inconclusive";
  }
  return "?";
}

/// Bounded: the last two rungs differ by less than stabilization*(1+|lambda|).
/// Divergent: strictly decreasing with a growing last step.
inline Trend classify_lambda_trend(const std::vector<SpectrumPoint> &trend,
                                   double stabilization = 0.01) {
  if (trend.size() < 3)
    return Trend::Inconclusive;
  const std::size_t k = trend.size() - 1;
  const double last = trend[k].lambda1;
  const double d_last = last - trend[k - 1].lambda1;
  if (std::abs(d_last) < stabilization * (1.0 + std::abs(last)))
    return Trend::Bounded;
  bool decreasing = true;
  for (std::size_t i = 1; i < trend.size(); ++i)
    decreasing = decreasing && trend[i].lambda1 < trend[i - 1].lambda1;
  const double d_prev = trend[k - 1].lambda1 - trend[k - 2].lambda1;
  if (decreasing && std::abs(d_last) > std::abs(d_prev))
    return Trend::Divergent;
  return Trend::Inconclusive;
}

struct DichotomyRow {
  double c = 0.0;
  Trend classification = Trend::Inconclusive;
  SpectrumReport report;
};

/// lambda1 along a nested ladder (Neumann outer condition) for every c.
inline std::vector<DichotomyRow>
dichotomy_scan(const WeightSpec &w, const std::vector<RadialGrid> &ladder,
               const std::vector<double> &c_list, std::uint64_t seed = 0,
               double stabilization = 0.01) {
  detail::require(!c_list.empty(), "dichotomy_scan: empty c_list");
  return parallel_map(c_list.size(), [&](std::size_t i) {
    DichotomyRow row;
    row.c = c_list[i];
    row.report = lambda1_ladder(ladder, w, c_list[i], OuterBc::Neumann, seed);
    row.classification = classify_lambda_trend(row.report.trend, stabilization);
    return row;
  });
}

} // namespace hardylab
