#pragma once

// Radial weight families, their logarithmic drift, and executable checks of
// the Hardy-type hypotheses on the weight.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hardylab/error.hpp"
#include "hardylab/quadrature.hpp"

namespace hardylab {

enum class Family { ExpPoly, LogPow, CosExp, Constant };

inline std::string_view to_string(Family f) {
  switch (f) {
  case Family::ExpPoly:
    return "ExpPoly";
  case Family::LogPow:
    return "LogPow";
  case Family::CosExp:
    return "CosExp";
  case Family::Constant:
    return "Constant";
  }
  return "?";
}

inline Family family_from_string(std::string_view s) {
  if (s == "ExpPoly")
    return Family::ExpPoly;
  if (s == "LogPow")
    return Family::LogPow;
  if (s == "CosExp")
    return Family::CosExp;
  if (s == "Constant")
    return Family::Constant;
  throw DomainError("unknown weight family '" + std::string(s) + "'");
}

/// A member of one of the radial weight families together with the Hardy
/// constants (k1, k2) it is paired with.
///
///   ExpPoly   mu(r) = r^-gamma exp(-delta r^m)
///   LogPow    mu(r) = log(1+r)^-gamma
///   CosExp    mu(r) = cos(exp(-r^2))
///   Constant  mu(r) = 1
struct WeightSpec {
  Family family = Family::Constant;
  double gamma = 0.0;
  double delta = 0.0;
  double m = 1.0;
  double k1 = 0.0;
  double k2 = 0.0;
  int dim = 3;

  /// Enforces the per-family parameter ranges (local integrability of mu
  /// and 1/mu, k2 > 2 - N). Throws DomainError.
  void validate() const {
    const double n = dim;
    detail::require(dim >= 3, "weight: dim must be >= 3");
    detail::require(std::isfinite(gamma) && std::isfinite(delta) &&
                        std::isfinite(m) && std::isfinite(k1) &&
                        std::isfinite(k2),
                    "weight: parameters must be finite");
    detail::require(k2 > 2.0 - n, "weight: k2 must exceed 2 - N");
    switch (family) {
    case Family::ExpPoly:
      detail::require(gamma < n - 2.0, "ExpPoly: gamma must be < N - 2");
      detail::require(gamma > -n, "ExpPoly: gamma must be > -N");
      detail::require(delta >= 0.0, "ExpPoly: delta must be >= 0");
      detail::require(m > 0.0, "ExpPoly: m must be > 0");
      break;
    case Family::LogPow:
      detail::require(gamma < n - 2.0, "LogPow: gamma must be < N - 2");
      detail::require(delta == 0.0, "LogPow: delta is fixed to 0");
      break;
    case Family::CosExp:
    case Family::Constant:
      detail::require(gamma == 0.0 && delta == 0.0,
                      std::string(to_string(family)) +
                          ": gamma and delta are fixed to 0");
      break;
    }
  }

  static WeightSpec constant(int dim, double k1 = 0.0, double k2 = 0.0) {
    WeightSpec w{Family::Constant, 0.0, 0.0, 1.0, k1, k2, dim};
    w.validate();
    return w;
  }

  static WeightSpec exp_poly(int dim, double gamma, double delta, double m,
                             double k1, double k2) {
    WeightSpec w{Family::ExpPoly, gamma, delta, m, k1, k2, dim};
    w.validate();
    return w;
  }

  static WeightSpec log_pow(int dim, double gamma, double k1, double k2) {
    WeightSpec w{Family::LogPow, gamma, 0.0, 1.0, k1, k2, dim};
    w.validate();
    return w;
  }

  static WeightSpec cos_exp(int dim, double k1 = 0.0, double k2 = 0.0) {
    WeightSpec w{Family::CosExp, 0.0, 0.0, 1.0, k1, k2, dim};
    w.validate();
    return w;
  }

  friend bool operator==(const WeightSpec &, const WeightSpec &) = default;
};

/// mu(r). Throws DomainError for r < 0 or a non-finite value.
inline double eval_weight(const WeightSpec &w, double r) {
  detail::require(r >= 0.0 && std::isfinite(r), "eval_weight: r must be >= 0");
  double v = 1.0;
  switch (w.family) {
  case Family::ExpPoly:
    v = std::pow(r, -w.gamma);
    if (w.delta != 0.0)
      v *= std::exp(-w.delta * std::pow(r, w.m));
    break;
  case Family::LogPow:
    v = std::pow(std::log1p(r), -w.gamma);
    break;
  case Family::CosExp:
    v = std::cos(std::exp(-r * r));
    break;
  case Family::Constant:
    break;
  }
  if (!std::isfinite(v))
    throw DomainError("eval_weight: non-finite weight at r = " +
                      std::to_string(r));
  return v;
}

/// Radial drift mu'(r)/mu(r).
inline double eval_log_drift(const WeightSpec &w, double r) {
  detail::require(r > 0.0 && std::isfinite(r),
                  "eval_log_drift: r must be > 0 (drift is singular at 0)");
  switch (w.family) {
  case Family::ExpPoly:
    return -w.gamma / r - w.delta * w.m * std::pow(r, w.m - 1.0);
  case Family::LogPow:
    return -w.gamma / ((1.0 + r) * std::log1p(r));
  case Family::CosExp: {
    const double e = std::exp(-r * r);
    return 2.0 * r * e * std::tan(e);
  }
  case Family::Constant:
    return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// H3

struct H3Report {
  bool holds = false;
  double max_violation = -std::numeric_limits<double>::infinity();
  double witness_r = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  double tolerance = 0.0;
};

/// Scan tolerance; the checked quantity is homogeneous in mu so it is
/// evaluated after dividing by mu.
inline double h3_tolerance(const WeightSpec &w, double alpha, double eps) {
  return 1e-9 * (1.0 + std::abs(w.k1) + std::abs(w.k2) * std::abs(alpha) / eps);
}

/// (alpha r mu'/mu)/(eps+r^2) - k1 - k2 alpha/(eps+r^2), i.e. LHS - RHS of H3
/// divided by mu(r).
inline double h3_excess(const WeightSpec &w, double alpha, double eps,
                        double r) {
  const double q = eps + r * r;
  return alpha * r * eval_log_drift(w, r) / q - w.k1 - w.k2 * alpha / q;
}

namespace detail {

// lim_{r->0} r mu'/mu
inline double small_r_log_slope(const WeightSpec &w) {
  switch (w.family) {
  case Family::ExpPoly:
  case Family::LogPow:
    return -w.gamma;
  default:
    return 0.0;
  }
}

// lim_{r->inf} mu'/(r mu); +-inf when it diverges.
inline double large_r_drift_over_r(const WeightSpec &w) {
  if (w.family != Family::ExpPoly || w.delta == 0.0)
    return 0.0;
  if (w.m > 2.0)
    return -std::numeric_limits<double>::infinity();
  if (w.m == 2.0)
    return -2.0 * w.delta;
  return 0.0;
}

} // namespace detail

/// Default scan: log-spaced radii over [1e-8, 1e4].
inline std::vector<double> default_h3_scan(std::size_t count = 481) {
  std::vector<double> r(count);
  for (std::size_t i = 0; i < count; ++i)
    r[i] = std::pow(10.0, -8.0 + 12.0 * double(i) / double(count - 1));
  return r;
}

/// Checks H3 on the scan radii and at the analytic r -> 0 and r -> inf
/// limits of the family.
inline H3Report check_h3(const WeightSpec &w, double alpha, double eps,
                         std::span<const double> r_scan) {
  detail::require(alpha < 0.0, "check_h3: alpha must be < 0");
  detail::require(eps > 0.0, "check_h3: eps must be > 0");
  detail::require(!r_scan.empty(), "check_h3: empty scan set");

  H3Report rep;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.tolerance = h3_tolerance(w, alpha, eps);

  auto consider = [&](double value, double r) {
    if (value > rep.max_violation) {
      rep.max_violation = value;
      rep.witness_r = r;
    }
  };
  for (double r : r_scan) {
    detail::require(r > 0.0 && std::isfinite(r),
                    "check_h3: scan radii must be positive and finite");
    consider(h3_excess(w, alpha, eps, r), r);
  }
  const double at_zero =
      (alpha * detail::small_r_log_slope(w) - w.k2 * alpha) / eps - w.k1;
  consider(at_zero, 0.0);
  const double tail = detail::large_r_drift_over_r(w);
  const double at_inf = std::isinf(tail)
                            ? std::numeric_limits<double>::infinity()
                            : alpha * tail - w.k1;
  consider(at_inf, std::numeric_limits<double>::infinity());

  rep.holds = rep.max_violation <= rep.tolerance;
  return rep;
}

inline H3Report check_h3(const WeightSpec &w, double alpha, double eps) {
  const auto scan = default_h3_scan();
  return check_h3(w, alpha, eps, scan);
}

// ---------------------------------------------------------------------------
// ExpPoly parameter conditions

enum class ExpPolyCase { I, II, III, None };

inline std::string_view to_string(ExpPolyCase c) {
  switch (c) {
  case ExpPolyCase::I:
    return "i";
  case ExpPolyCase::II:
    return "ii";
  case ExpPolyCase::III:
    return "iii";
  case ExpPolyCase::None:
    return "none";
  }
  return "?";
}

struct ExpPolyClass {
  ExpPolyCase which = ExpPolyCase::None;
  double required_k1 = std::numeric_limits<double>::quiet_NaN();
};

/// Which sufficient condition for H3 applies to r^-gamma exp(-delta r^m),
/// and the smallest k1 it prescribes.
inline ExpPolyClass classify_exp_poly(double gamma, double delta, double m,
                                      double k2, double alpha) {
  detail::require(alpha < 0.0, "classify_exp_poly: alpha must be < 0");
  detail::require(delta >= 0.0 && m > 0.0,
                  "classify_exp_poly: need delta >= 0 and m > 0");
  if (gamma <= -k2 && delta == 0.0)
    return {ExpPolyCase::I, 0.0};
  if (gamma <= -k2 && m == 2.0)
    return {ExpPolyCase::II, -2.0 * alpha * delta};
  if (gamma < -k2 && m < 2.0) {
    const double p = 2.0 / m - 1.0;
    const double num = 0.5 * m * std::pow(1.0 - 0.5 * m, p) *
                       std::pow(-alpha * delta * m, 2.0 / m);
    const double den = std::pow(alpha * (gamma + k2), p);
    return {ExpPolyCase::III, num / den};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Consequences of H3 and the H6 exponent

/// mu(r0) (r/r0)^(k2 - k1 eps/|alpha|) exp(-k1 (r^2 - r0^2) / (2|alpha|)),
/// the lower bound every H3-admissible radial weight satisfies for r >= r0.
inline double radial_lower_bound(const WeightSpec &w, double r0, double r,
                                 double alpha, double eps) {
  detail::require(r0 > 0.0, "radial_lower_bound: r0 must be > 0");
  detail::require(r >= r0, "radial_lower_bound: r must be >= r0");
  detail::require(alpha < 0.0 && eps > 0.0,
                  "radial_lower_bound: need alpha < 0 and eps > 0");
  const double a = std::abs(alpha);
  const double expo = w.k2 - w.k1 * eps / a;
  return eval_weight(w, r0) * std::pow(r / r0, expo) *
         std::exp(-w.k1 * (r * r - r0 * r0) / (2.0 * a));
}

/// Brute-force refinement test for local integrability at 0 of
/// r^(N-1-delta') mu(r): the increments of the integral over [r_min, 1] are
/// tracked as r_min -> 0 and must contract. The boundary exponent is treated
/// as non-integrable.
inline bool h6_integrable(const WeightSpec &w, double delta_prime) {
  const double n = w.dim;
  auto integrand = [&](double r) {
    return std::pow(r, n - 1.0 - delta_prime) * eval_weight(w, r);
  };
  // decades [1e-4(j+1), 1e-4j]
  std::vector<double> inc;
  double hi = 1.0;
  for (int j = 1; j <= 10; ++j) {
    const double lo = std::pow(10.0, -4.0 * j);
    inc.push_back(geometric_gauss(integrand, lo, hi, 1.25, 8));
    hi = lo;
  }
  for (double v : inc)
    if (!std::isfinite(v))
      return false;
  const double ratio = inc[inc.size() - 1] / inc[inc.size() - 2];
  const double ratio_prev = inc[inc.size() - 2] / inc[inc.size() - 3];
  return ratio < 0.95 && ratio_prev < 0.95;
}

/// The k2 implied by H6, i.e. minus the small-r power exponent of mu,
/// checked by integrability just below and above the critical exponent.
inline double k2_from_h6(const WeightSpec &w) {
  const double k2 = detail::small_r_log_slope(w) + 0.0; // no -0
  const double crit = w.dim + k2;
  if (!h6_integrable(w, crit - 0.1) || h6_integrable(w, crit + 0.1))
    throw DomainError("k2_from_h6: weight does not have power-law behaviour "
                      "at the origin");
  return k2;
}

} // namespace hardylab
