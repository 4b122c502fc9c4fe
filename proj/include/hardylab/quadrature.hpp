#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hardylab/error.hpp"

namespace hardylab {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussRule gauss_legendre(int order) {
  detail::require(order >= 1 && order <= 64,
                  "gauss_legendre: order must be in [1, 64]");
  GaussRule rule;
  rule.x.resize(order);
  rule.w.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= order; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16)
        break;
    }
    rule.x[i] = -z;
    rule.x[order - 1 - i] = z;
    rule.w[i] = rule.w[order - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

/// Gauss quadrature of f on [a, b] with one panel.
template <class F>
double gauss_panel(const F &f, double a, double b, const GaussRule &rule) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.x.size(); ++q)
    s += rule.w[q] * f(mid + half * rule.x[q]);
  return s * half;
}

/// Composite Gauss quadrature of f on [a, b] with equal panels.
template <class F>
double uniform_gauss(const F &f, double a, double b, int panels, int order) {
  const GaussRule rule = gauss_legendre(order);
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double x0 = a + (b - a) * p / panels;
    const double x1 = a + (b - a) * (p + 1) / panels;
    s += gauss_panel(f, x0, x1, rule);
  }
  return s;
}

/// Composite Gauss quadrature of f on [lo, hi], 0 < lo < hi, with panels
/// whose endpoints grow geometrically by `ratio`. Suited to power-law
/// integrands near 0.
template <class F>
double geometric_gauss(const F &f, double lo, double hi, double ratio,
                       int order) {
  detail::require(lo > 0.0 && hi > lo && ratio > 1.0,
                  "geometric_gauss: need 0 < lo < hi and ratio > 1");
  const GaussRule rule = gauss_legendre(order);
  const int panels = std::max(
      1, static_cast<int>(std::ceil(std::log(hi / lo) / std::log(ratio))));
  const double q = std::pow(hi / lo, 1.0 / panels);
  double s = 0.0;
  double x0 = lo;
  for (int p = 0; p < panels; ++p) {
    const double x1 = (p + 1 == panels) ? hi : x0 * q;
    s += gauss_panel(f, x0, x1, rule);
    x0 = x1;
  }
  return s;
}

} // namespace hardylab
