#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hardylab/forms.hpp"
#include "hardylab/hardy.hpp"

using namespace hardylab;

TEST(COfAlpha, Examples) {
  EXPECT_DOUBLE_EQ(c_of_alpha(3, 0.0, -0.5), 0.25);
  EXPECT_DOUBLE_EQ(c_of_alpha(5, 0.0, -1.5), 2.25);
  EXPECT_DOUBLE_EQ(c_of_alpha(5, -1.0, -1.0), 1.0);
  EXPECT_NEAR(c_of_alpha(3, 0.0, -1e-12), 1e-12, 1e-20);
}

TEST(AlphaOpt, Examples) {
  const auto a = alpha_opt(3, 0.0);
  EXPECT_DOUBLE_EQ(a.alpha_o, -0.5);
  EXPECT_DOUBLE_EQ(a.c_o, 0.25);
  EXPECT_DOUBLE_EQ(alpha_opt(5, -1.0).c_o, 1.0);
  EXPECT_DOUBLE_EQ(alpha_opt(4, 0.5).alpha_o, -1.25);
  EXPECT_THROW(alpha_opt(3, -1.0), DomainError);
}

TEST(AlphaOpt, MaximisesConcaveCurve) {
  for (int n : {3, 4, 5, 7})
    for (double k2 : {-0.5, 0.0, 0.5, 1.0}) {
      const auto a = alpha_opt(n, k2);
      EXPECT_NEAR(c_of_alpha(n, k2, a.alpha_o), a.c_o, 1e-14);
      for (int i = 1; i <= 200; ++i) {
        const double alpha = -0.02 * i * std::abs(a.alpha_o) * 2.0;
        EXPECT_LE(c_of_alpha(n, k2, alpha), a.c_o + 1e-15);
      }
      // second difference is -2 h^2
      const double h = 0.1, x = a.alpha_o + 0.3;
      EXPECT_NEAR(c_of_alpha(n, k2, x + h) - 2.0 * c_of_alpha(n, k2, x) +
                      c_of_alpha(n, k2, x - h),
                  -2.0 * h * h, 1e-12);
    }
}

TEST(BestConstant, OneDofHandComputation) {
  // nodes {0.5, 1}, Dirichlet at 1: the only basis function is (1 - r)/0.5
  RadialGrid g;
  g.nodes = {0.5, 1.0};
  g.dim = 3;
  g.quad_order = 4;
  const auto w = WeightSpec::constant(3);
  const auto f = assemble(g, w, OuterBc::Dirichlet);
  ASSERT_EQ(f.dofs(), 1);
  const double four_pi = 4.0 * std::numbers::pi;
  // A = 4 pi int_{1/2}^1 4 r^2 dr, S = 4 pi int_{1/2}^1 4 (1 - r)^2 dr
  const double A = four_pi * 4.0 * (1.0 - 0.125) / 3.0;
  const double S = four_pi * 4.0 * (0.125 / 3.0);
  const auto rep = best_constant(f, 0.0);
  EXPECT_NEAR(rep.c_star, A / S, 1e-12 * A / S);
  EXPECT_DOUBLE_EQ(rep.c_theory, 0.25);
}

TEST(BestConstant, RequiresDirichlet) {
  const auto g = build_grid(1.0, 8, Grading::Uniform, 1.0, 3);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Neumann);
  EXPECT_THROW(best_constant(f, 0.0), DomainError);
}

TEST(BestConstant, IndefiniteShiftRejected) {
  const auto g = build_grid(1.0, 32, Grading::Uniform, 1.0, 3);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Dirichlet);
  EXPECT_THROW(best_constant(f, -1e6), DomainError);
}

TEST(BestConstant, VariationalUpperBound) {
  const double ratio = ratio_for_r1(1.0, 1e-8, 300);
  const auto g = build_grid(1.0, 300, Grading::Geometric, ratio, 3);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Dirichlet);
  const auto rep = best_constant(f, 0.0);
  EXPECT_LE(rep.residual, 1e-8);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd v(f.dofs());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = u(gen);
    EXPECT_GE(f.A.quadratic(v) / f.S.quadratic(v), rep.c_star * (1.0 - 1e-12));
  }
  // smooth trial functions too
  for (double a : {-0.3, -0.45, 0.5}) {
    const auto v = project(f, [a](double r) { return std::pow(r, a) * (1.0 - r); });
    EXPECT_GE(f.A.quadratic(v) / f.S.quadratic(v), rep.c_star * (1.0 - 1e-12));
  }
}

TEST(BestConstant, ScaleInvariance) {
  const auto w = WeightSpec::exp_poly(5, 1.0, 0, 1, 0, -1);
  const double ratio = ratio_for_r1(1.0, 1e-6, 200);
  double base = 0.0;
  for (double lambda : {1.0, 0.5, 2.0}) {
    const auto g = build_grid(lambda, 200, Grading::Geometric, ratio, 5);
    const auto rep = best_constant(assemble(g, w, OuterBc::Dirichlet), 0.0);
    if (lambda == 1.0)
      base = rep.c_star;
    EXPECT_NEAR(rep.c_star / base, 1.0, 1e-6) << lambda;
  }
}

TEST(HardyLadder, MonotoneAndAboveTheory) {
  const double ratio = ratio_for_r1(1.0, 1e-12, 1024);
  const auto ladder = nested_ladder(1.0, 1024, 4, Grading::Geometric, ratio, 3);
  const auto rep = hardy_ladder(ladder, WeightSpec::constant(3), 0.0);
  ASSERT_EQ(rep.refinement_history.size(), 4u);
  EXPECT_TRUE(rep.monotone);
  for (const auto &h : rep.refinement_history)
    EXPECT_GE(h.c_star, rep.c_theory * (1.0 - 1e-9));
  EXPECT_LE(rep.residual, 1e-8);
  EXPECT_LT(std::abs(rep.c_extrapolated - 0.25), std::abs(rep.c_star - 0.25) + 1e-12);
}

TEST(Richardson, GeometricSequence) {
  // c_k = 1 + 0.5^k
  EXPECT_NEAR(richardson_last_three(1.5, 1.25, 1.125), 1.0, 1e-15);
  EXPECT_EQ(richardson_last_three(1.0, 2.0, 4.0), 4.0);
  EXPECT_EQ(richardson_last_three(1.0, 1.0, 1.0), 1.0);
}

namespace {

Eigen::VectorXd hat(const RadialGrid &g, std::size_t node) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  v(static_cast<Eigen::Index>(node)) = 1.0;
  return v;
}

} // namespace

TEST(FepsChain, HatFunctionAtOptimalAlpha) {
  const auto g = build_grid(1.0, 16, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::constant(3);
  const auto ch = verify_feps_chain(w, g, -0.5, 0.01, hat(g, 7));
  EXPECT_GE(ch.gap, -ch.tolerance);
  EXPECT_TRUE(ch.h3.holds);
  EXPECT_NEAR(ch.gap, ch.rhs - ch.lhs, 1e-15 * ch.rhs);
}

TEST(FepsChain, ZeroFunction) {
  const auto g = build_grid(1.0, 16, Grading::Uniform, 1.0, 3);
  const auto ch = verify_feps_chain(WeightSpec::constant(3), g, -0.5, 0.01,
                                    Eigen::VectorXd::Zero(16));
  EXPECT_EQ(ch.lhs, 0.0);
  EXPECT_EQ(ch.rhs, 0.0);
}

TEST(FepsChain, ApproachesFatouLimit) {
  const auto g = build_grid(1.0, 16, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::constant(3);
  const Eigen::VectorXd phi = hat(g, 7);
  double prev = 1e300;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    const auto ch = verify_feps_chain(w, g, -0.5, eps, phi);
    const double d = std::abs(ch.lhs - ch.fatou_limit);
    EXPECT_LT(d, prev) << eps;
    prev = d;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(FepsChain, RefusesWhenH3Fails) {
  const auto g = build_grid(1.0, 16, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::exp_poly(3, 0.0, 1.0, 2.0, 0.0, 0.0);
  EXPECT_THROW(verify_feps_chain(w, g, -1.0, 0.01, hat(g, 7)), DomainError);
  Eigen::VectorXd bad = hat(g, 15);
  EXPECT_THROW(verify_feps_chain(WeightSpec::constant(3), g, -0.5, 0.01, bad),
               DomainError);
}

TEST(HardyType, PowerProfileIsSharp) {
  const auto g = build_grid(1.0, 64, Grading::Geometric, 1.1, 3);
  const auto f = RadialProfile::power(-0.5);
  const Eigen::VectorXd phi =
      project(g, [](double r) { return (1.0 - r) * std::sqrt(r); });
  const auto res = hardy_type_check(g, f, [](double r) { return 0.25 / (r * r); }, phi);
  EXPECT_TRUE(res.pointwise_holds);
  EXPECT_NEAR(res.worst_pointwise, 0.0, 1e-9);
  EXPECT_TRUE(res.holds);
}

TEST(HardyType, ZeroPotentialMarginIsDirichletEnergy) {
  const auto g = build_grid(1.0, 32, Grading::Uniform, 1.0, 3);
  const Eigen::VectorXd phi = project(g, [](double r) { return 1.0 - r * r; });
  const auto res =
      hardy_type_check(g, RadialProfile::power(0.0), [](double) { return 0.0; }, phi);
  EXPECT_TRUE(res.holds);
  // int |(1 - r^2)'|^2 dx over [r1, 1] for the interpolant; compare with the
  // closed form for the exact function within interpolation error
  const double exact = 4.0 * std::numbers::pi * 4.0 / 5.0;
  EXPECT_NEAR(res.margin, exact, 0.02 * exact);
}

TEST(HardyType, PotentialAboveSupersolutionFails) {
  const auto g = build_grid(1.0, 32, Grading::Uniform, 1.0, 3);
  const Eigen::VectorXd phi = project(g, [](double r) { return 1.0 - r; });
  const auto res = hardy_type_check(g, RadialProfile::power(-0.5),
                                    [](double r) { return 0.5 / (r * r); }, phi);
  EXPECT_FALSE(res.pointwise_holds);
  EXPECT_FALSE(res.holds);
}

TEST(HardyType, DaviesProfile) {
  const double eps = 0.01, a = -0.5;
  const auto f = RadialProfile::davies(a, eps);
  // -Delta f / f by centred differences of the radial Laplacian
  for (double r : {0.05, 0.3, 1.2}) {
    const double h = 1e-4 * r;
    const double fpp = (f.value(r + h) - 2.0 * f.value(r) + f.value(r - h)) / (h * h);
    const double fp = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
    const double lap = fpp + 2.0 / r * fp;
    EXPECT_NEAR(f.minus_laplacian_ratio(r, 3), -lap / f.value(r),
                1e-5 * std::abs(lap / f.value(r)));
  }
}
