#pragma once

// Time stepping of u_t = L u + min(c/r^2, n) u on the Galerkin space, and
// growth-rate estimation along a sweep of potential caps n.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "hardylab/error.hpp"
#include "hardylab/forms.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/spectrum.hpp"
#include "hardylab/tridiagonal.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

enum class Scheme { ImplicitEuler, CrankNicolson };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::ImplicitEuler ? "implicit-euler" : "crank-nicolson";
}

inline Scheme scheme_from_string(std::string_view s) {
  if (s == "implicit-euler")
    return Scheme::ImplicitEuler;
  if (s == "crank-nicolson")
    return Scheme::CrankNicolson;
  throw DomainError("unknown time scheme '" + std::string(s) + "'");
}

struct EvolutionOptions {
  Scheme scheme = Scheme::ImplicitEuler;
  /// components below -positivity_tol * ||u||_M count as violations
  double positivity_tol = 1e-12;
};

struct EvolutionTrace {
  double c = 0.0;
  double truncation_n = 0.0;
  double tau = 0.0;
  Scheme scheme = Scheme::ImplicitEuler;
  std::vector<double> times;
  /// ||u||_M; may overflow to inf on divergent runs, log_norms never does
  std::vector<double> norms;
  std::vector<double> log_norms;
  std::vector<double> masses;
  double omega_fit = 0.0;
  /// step matrix is an M-matrix and the right-hand side map is nonnegative
  bool positivity_certified = false;
  bool nonnegative_start = false;
  std::size_t positivity_violations = 0;
  /// most negative component over ||u||_M seen during the run
  double min_component_ratio = 0.0;
  /// largest (||u1||^2 - ||u0||^2)/tau - 2 q(u1), relative, over the run
  double energy_excess = -std::numeric_limits<double>::infinity();
  /// direction of the final state (unit M-norm) and its log scale
  Eigen::VectorXd final_state;
  double final_log_scale = 0.0;
};

namespace detail {

/// LDL^T of a symmetric positive definite tridiagonal matrix.
struct TridiagonalLdlt {
  Eigen::VectorXd d, l;

  static bool factor(const SymTridiagonal &t, TridiagonalLdlt &out) {
    const Eigen::Index n = t.size();
    out.d.resize(n);
    out.l.resize(std::max<Eigen::Index>(n - 1, 0));
    out.d(0) = t.diag(0);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!(out.d(i) > 0.0))
        return false;
      out.l(i) = t.off(i) / out.d(i);
      out.d(i + 1) = t.diag(i + 1) - out.l(i) * t.off(i);
    }
    return out.d(n - 1) > 0.0;
  }

  void solve(Eigen::VectorXd &x) const {
    const Eigen::Index n = d.size();
    for (Eigen::Index i = 1; i < n; ++i)
      x(i) -= l(i - 1) * x(i - 1);
    for (Eigen::Index i = 0; i < n; ++i)
      x(i) /= d(i);
    for (Eigen::Index i = n - 2; i >= 0; --i)
      x(i) -= l(i) * x(i + 1);
  }
};

inline bool nonpositive_off_diagonal(const SymTridiagonal &t) {
  return (t.off.array() <= 0.0).all();
}

inline bool nonnegative_entries(const SymTridiagonal &t) {
  return (t.diag.array() >= 0.0).all() && (t.off.array() >= 0.0).all();
}

/// Least-squares slope of y against x.
inline double ls_slope(const double *x, const double *y, std::size_t n) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

} // namespace detail

/// Slope of log ||u(t)|| over the final half of the recorded steps.
inline double growth_rate(const EvolutionTrace &trace) {
  const std::size_t count = trace.times.size();
  detail::require(count >= 11, "growth_rate: need at least 10 recorded steps");
  std::vector<double> logs = trace.log_norms;
  if (logs.size() != count) {
    detail::require(trace.norms.size() == count,
                    "growth_rate: trace has no norms");
    logs.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      logs[i] = std::log(trace.norms[i]);
  }
  for (double v : logs)
    if (!std::isfinite(v))
      throw DomainError("growth_rate: norm hit zero (or is not finite)");
  const std::size_t first = count / 2;
  return detail::ls_slope(trace.times.data() + first, logs.data() + first,
                          count - first);
}

/// Trace built from sampled norms (for post-processing external data).
inline EvolutionTrace trace_from_norms(std::vector<double> times,
                                       std::vector<double> norms) {
  detail::require(times.size() == norms.size(),
                  "trace_from_norms: size mismatch");
  EvolutionTrace t;
  t.times = std::move(times);
  t.norms = std::move(norms);
  for (double v : t.norms)
    t.log_norms.push_back(std::log(v));
  return t;
}

/// Singular mass with min(1/r^2, trunc_n/c), so c S_n has potential <= trunc_n.
inline SymTridiagonal truncated_singular_mass(const DiscreteForms &forms,
                                              double c, double trunc_n) {
  detail::require(trunc_n > 0.0, "truncated mass: trunc_n must be > 0");
  if (c == 0.0)
    return SymTridiagonal(forms.dofs());
  AssemblyOptions opt = forms.options;
  opt.potential_cap = trunc_n / c;
  return assemble(forms.grid, forms.weight, forms.bc, opt).S;
}

/// Runs (M + tau K) u^{k+1} = M u^k (implicit Euler) or the Crank-Nicolson
/// analogue with K = A - c S_n, recording the trace after every step.
inline EvolutionTrace evolve(const DiscreteForms &forms, double c,
                             double trunc_n, const Eigen::VectorXd &u0,
                             double tau, double T,
                             const EvolutionOptions &opt = {}) {
  detail::require(c >= 0.0 && std::isfinite(c), "evolve: c must be >= 0");
  detail::require(tau > 0.0 && T > 0.0, "evolve: tau and T must be > 0");
  detail::require(u0.size() == forms.dofs(),
                  "evolve: u0 must live on the active degrees of freedom");
  detail::require(u0.allFinite() && u0.cwiseAbs().maxCoeff() > 0.0,
                  "evolve: u0 must be finite and nonzero");
  const auto steps = static_cast<std::size_t>(std::llround(T / tau));
  detail::require(steps >= 1, "evolve: T/tau must be at least 1");

  const SymTridiagonal &M = forms.M;
  const SymTridiagonal K =
      combine(1.0, forms.A, -c, truncated_singular_mass(forms, c, trunc_n));
  const double theta = opt.scheme == Scheme::ImplicitEuler ? 1.0 : 0.5;
  const SymTridiagonal lhs = combine(1.0, M, theta * tau, K);
  const SymTridiagonal rhs =
      opt.scheme == Scheme::ImplicitEuler
          ? M
          : combine(1.0, M, -(1.0 - theta) * tau, K);

  detail::TridiagonalLdlt ldlt;
  if (!detail::TridiagonalLdlt::factor(lhs, ldlt))
    throw SolverError("evolve: step matrix M + tau (A - c S_n) is not positive "
                      "definite (tau = " + std::to_string(tau) +
                      ", trunc_n = " + std::to_string(trunc_n) +
                      "); reduce tau");

  EvolutionTrace tr;
  tr.c = c;
  tr.truncation_n = trunc_n;
  tr.tau = tau;
  tr.scheme = opt.scheme;
  tr.positivity_certified =
      detail::nonpositive_off_diagonal(lhs) && detail::nonnegative_entries(rhs);
  tr.nonnegative_start = (u0.array() >= 0.0).all();

  const Eigen::VectorXd ones_full =
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(forms.grid.size()));
  // int u dmu through the full mass matrix (Dirichlet zero included)
  SymTridiagonal full_mass;
  if (forms.bc == OuterBc::Dirichlet)
    full_mass = assemble(forms.grid, forms.weight, OuterBc::Neumann,
                         forms.options).M;
  auto mass = [&](const Eigen::VectorXd &u) {
    return forms.bc == OuterBc::Neumann
               ? ones_full.dot(M * u)
               : ones_full.dot(full_mass * expand(forms, u));
  };

  Eigen::VectorXd u = u0;
  double log_scale = 0.0;
  auto record = [&](double t) {
    const double nu = std::sqrt(M.quadratic(u));
    if (!(nu > 0.0) || !std::isfinite(nu))
      throw SolverError("evolve: state norm degenerated at t = " +
                        std::to_string(t));
    const double ln = log_scale + std::log(nu);
    tr.times.push_back(t);
    tr.log_norms.push_back(ln);
    tr.norms.push_back(std::exp(ln));
    tr.masses.push_back(std::exp(log_scale) * mass(u));
    if (tr.nonnegative_start) {
      const double worst = u.minCoeff() / nu;
      tr.min_component_ratio = std::min(tr.min_component_ratio, worst);
      if (worst < -opt.positivity_tol)
        ++tr.positivity_violations;
    }
    return nu;
  };

  record(0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double n0 = M.quadratic(u);
    Eigen::VectorXd next = rhs * u;
    ldlt.solve(next);
    if (!next.allFinite())
      throw SolverError("evolve: non-finite state at step " +
                        std::to_string(k));
    // (||u1||^2 - ||u0||^2)/tau <= 2 u1^T (c S_n - A) u1 for implicit Euler
    if (opt.scheme == Scheme::ImplicitEuler) {
      const double n1 = M.quadratic(next);
      const double q = -K.quadratic(next);
      const double excess = (n1 - n0) / tau - 2.0 * q;
      const double scale =
          (n1 + n0) / tau + 2.0 * std::abs(q) + std::numeric_limits<double>::min();
      tr.energy_excess = std::max(tr.energy_excess, excess / scale);
    }
    u = std::move(next);
    const double nu = record(static_cast<double>(k) * tau);
    if (nu > 1e100 || nu < 1e-100) {
      u /= nu;
      log_scale += std::log(nu);
    }
  }
  if (tr.nonnegative_start && tr.positivity_certified &&
      tr.positivity_violations > 0)
    throw InvariantViolation(
        "evolve: negative components (min u/||u|| = " +
        std::to_string(tr.min_component_ratio) +
        ") although the step is certified positivity preserving");

  tr.final_log_scale = log_scale + std::log(std::sqrt(M.quadratic(u)));
  tr.final_state = u / std::sqrt(M.quadratic(u));
  if (tr.times.size() >= 11)
    tr.omega_fit = growth_rate(tr);
  return tr;
}

/// Nonnegative bump cos^2(pi r/2) on r < 1, unit norm in L^2_mu, on the
/// active degrees of freedom.
inline Eigen::VectorXd default_initial_state(const DiscreteForms &forms) {
  Eigen::VectorXd u = project(forms, [](double r) {
    if (r >= 1.0)
      return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * r);
    return c * c;
  });
  const double nu = std::sqrt(forms.M.quadratic(u));
  detail::require(nu > 0.0, "default_initial_state: bump misses every node");
  return u / nu;
}

/// Continuous-time rate implied by an implicit Euler growth factor: the
/// discrete run grows like (1 + tau lambda)^(-t/tau).
inline double implicit_euler_rate(double lambda, double tau) {
  return -std::log1p(tau * lambda) / tau;
}

struct SweepRow {
  double trunc_n = 0.0;
  double omega_fit = 0.0;
  /// lambda1 of (A - c S_n, M) on the same forms
  double lambda1 = 0.0;
  double lambda1_residual = 0.0;
  /// |omega_fit + lambda1| / (1 + |lambda1|)
  double agreement = 0.0;
  bool positivity_certified = false;
};

struct SweepReport {
  double c = 0.0;
  double tau = 0.0;
  double T = 0.0;
  std::vector<SweepRow> rows;
  Trend classification = Trend::Inconclusive;
};

/// Divergent: strictly increasing with non-shrinking gaps. Bounded: last
/// difference at most stabilization*(1 + |omega|).
inline Trend classify_omega_trend(const std::vector<double> &omega,
                                  double stabilization = 0.05) {
  if (omega.size() < 3)
    return Trend::Inconclusive;
  bool increasing = true, widening = true;
  for (std::size_t i = 1; i < omega.size(); ++i) {
    increasing = increasing && omega[i] > omega[i - 1];
    if (i >= 2)
      widening = widening &&
                 omega[i] - omega[i - 1] >= omega[i - 1] - omega[i - 2];
  }
  if (increasing && widening)
    return Trend::Divergent;
  const double last = omega.back();
  if (std::abs(last - omega[omega.size() - 2]) <=
      stabilization * (1.0 + std::abs(last)))
    return Trend::Bounded;
  return Trend::Inconclusive;
}

inline SweepReport blowup_sweep(const DiscreteForms &forms, double c,
                                const std::vector<double> &trunc_list,
                                const Eigen::VectorXd &u0, double tau, double T,
                                const EvolutionOptions &opt = {},
                                std::uint64_t seed = 0) {
  detail::require(trunc_list.size() >= 3,
                  "blowup_sweep: need at least three truncation levels");
  for (std::size_t i = 1; i < trunc_list.size(); ++i)
    detail::require(trunc_list[i] > trunc_list[i - 1],
                    "blowup_sweep: trunc_list must be increasing");
  detail::require(trunc_list.front() > 0.0 &&
                      trunc_list.back() >= 100.0 * trunc_list.front(),
                  "blowup_sweep: trunc_list must span at least two decades");

  SweepReport rep;
  rep.c = c;
  rep.tau = tau;
  rep.T = T;
  rep.rows = parallel_map(trunc_list.size(), [&](std::size_t i) {
    const double n = trunc_list[i];
    const EvolutionTrace tr = evolve(forms, c, n, u0, tau, T, opt);
    PencilOptions popt;
    popt.seed = seed;
    const PencilEigen eig = pencil_eigen(
        combine(1.0, forms.A, -c, truncated_singular_mass(forms, c, n)),
        forms.M, 0, popt);
    SweepRow row;
    row.trunc_n = n;
    row.omega_fit = tr.omega_fit;
    row.lambda1 = eig.value;
    row.lambda1_residual = eig.residual;
    row.agreement =
        std::abs(tr.omega_fit + eig.value) / (1.0 + std::abs(eig.value));
    row.positivity_certified = tr.positivity_certified;
    return row;
  });
  std::vector<double> omega;
  for (const auto &r : rep.rows)
    omega.push_back(r.omega_fit);
  rep.classification = classify_omega_trend(omega);
  return rep;
}

} // namespace hardylab
