#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hardylab/forms.hpp"
#include "hardylab/grid.hpp"

using namespace hardylab;

namespace {

// composite Simpson, independent of the Gauss rules used by the library
template <class F> double simpson(const F &f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i)
    s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = d(gen);
  return v;
}

} // namespace

TEST(BuildGrid, Examples) {
  const auto u = build_grid(1.0, 3, Grading::Uniform, 1.0, 3);
  ASSERT_EQ(u.size(), 3u);
  EXPECT_DOUBLE_EQ(u.nodes[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(u.nodes[1], 2.0 / 3.0);
  EXPECT_EQ(u.nodes[2], 1.0);

  const auto g = build_grid(1.0, 4, Grading::Geometric, 2.0, 3);
  const std::vector<double> expect = {0.125, 0.25, 0.5, 1.0};
  EXPECT_EQ(g.nodes, expect);
}

TEST(BuildGrid, DoublingHalvesWidth) {
  for (int n : {4, 16, 100}) {
    const auto a = build_grid(2.0, n, Grading::Uniform, 1.0, 3);
    const auto b = build_grid(2.0, 2 * n, Grading::Uniform, 1.0, 3);
    EXPECT_NEAR(b.nodes[1] - b.nodes[0], 0.5 * (a.nodes[1] - a.nodes[0]), 1e-15);
  }
}

TEST(BuildGrid, RejectsBadInput) {
  EXPECT_THROW(build_grid(1.0, 1, Grading::Uniform, 1.0, 3), DomainError);
  EXPECT_THROW(build_grid(0.0, 4, Grading::Uniform, 1.0, 3), DomainError);
  EXPECT_THROW(build_grid(1.0, 4, Grading::Geometric, 1.0, 3), DomainError);
  EXPECT_THROW(build_grid(1.0, 4, Grading::Uniform, 1.0, 3, 1), DomainError);
  EXPECT_THROW(build_grid(1.0, 400, Grading::Geometric, 10.0, 3), DomainError);
}

TEST(BuildGrid, GeometricRatioForR1) {
  const double ratio = ratio_for_r1(1.0, 1e-20, 4096);
  const auto g = build_grid(1.0, 4096, Grading::Geometric, ratio, 3);
  EXPECT_NEAR(g.r1() / 1e-20, 1.0, 1e-9);
  for (std::size_t i = 1; i < g.size(); ++i)
    EXPECT_GT(g.nodes[i], g.nodes[i - 1]);
}

TEST(NestedLadder, NodesAreNested) {
  const double ratio = ratio_for_r1(1.0, 1e-10, 256);
  const auto ladder = nested_ladder(1.0, 256, 3, Grading::Geometric, ratio, 3);
  ASSERT_EQ(ladder.size(), 3u);
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    EXPECT_EQ(2 * ladder[k].size(), ladder[k + 1].size());
    EXPECT_GT(ladder[k].r1(), ladder[k + 1].r1());
    const auto &fine = ladder[k + 1].nodes;
    for (double r : ladder[k].nodes) {
      bool found = false;
      for (double s : fine)
        found = found || std::abs(s - r) <= 1e-14 * r;
      EXPECT_TRUE(found) << r;
    }
  }
  EXPECT_THROW(nested_ladder(1.0, 100, 4, Grading::Uniform, 1.0, 3), DomainError);
}

TEST(IntegrateRadial, BallVolume) {
  const auto g = build_grid(1.0, 64, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::constant(3);
  // core (0, 1/64) excluded
  const double r1 = g.r1();
  EXPECT_NEAR(integrate_radial(g, w, [](double) { return 1.0; }),
              4.0 / 3.0 * std::numbers::pi * (1.0 - r1 * r1 * r1), 1e-13);
}

TEST(IntegrateRadial, ClosedFormOracle) {
  const double r1 = 1e-6, R = 1.0;
  const int n = 513;
  const auto g =
      build_grid(R, n, Grading::Geometric, ratio_for_r1(R, r1, n), 5);
  // mu = r^-1 in N = 5: d mu = omega_4 r^3 dr
  const auto w = WeightSpec::exp_poly(5, 1.0, 0.0, 1.0, 0.0, -1.0);
  const double area = sphere_area(5);
  auto exact = [&](double p) { // int_r1^R r^p dr
    return (std::pow(R, p + 1) - std::pow(r1, p + 1)) / (p + 1);
  };
  struct Case {
    double power;
    double expect;
  };
  for (const Case &c : {Case{0.0, area * exact(3.0)}, Case{1.0, area * exact(4.0)},
                        Case{-2.0, area * exact(1.0)}}) {
    const double got =
        integrate_radial(g, w, [&](double r) { return std::pow(r, c.power); });
    EXPECT_NEAR(got / c.expect, 1.0, 1e-8) << "power " << c.power;
  }
}

TEST(IntegrateRadial, RefinementReducesError) {
  const auto w = WeightSpec::constant(3);
  auto f = [](double r) { return std::exp(r); };
  double prev = 1e300;
  for (int n : {4, 8, 16, 32, 64}) {
    const auto g = build_grid(1.0, n, Grading::Uniform, 1.0, 3, 2);
    const double a = g.r1();
    // int_a^1 e^r r^2 dr = [e^r (r^2 - 2r + 2)]
    auto F = [](double r) { return std::exp(r) * (r * r - 2.0 * r + 2.0); };
    const double exact = 4.0 * std::numbers::pi * (F(1.0) - F(a));
    const double err = std::abs(integrate_radial(g, w, f) - exact);
    EXPECT_LT(err, prev) << n;
    prev = err;
  }
}

TEST(IntegrateRadial, NonFiniteNamesCell) {
  const auto g = build_grid(1.0, 8, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::constant(3);
  try {
    integrate_radial(g, w, [](double r) { return r > 0.5 ? INFINITY : 1.0; });
    FAIL() << "expected DomainError";
  } catch (const DomainError &e) {
    EXPECT_NE(std::string(e.what()).find("cell"), std::string::npos);
  }
}

TEST(Assemble, OneDimensionalMassPattern) {
  // N = 1 weight built directly; omega_0 overridden to 1
  const WeightSpec w{Family::Constant, 0.0, 0.0, 1.0, 0.0, 0.0, 1};
  const auto g = build_grid(1.0, 3, Grading::Uniform, 1.0, 1);
  AssemblyOptions opt;
  opt.sphere_area = 1.0;
  const auto f = assemble(g, w, OuterBc::Neumann, opt);
  const double h = 1.0 / 3.0;
  EXPECT_NEAR(f.M.diag(0), 2.0 * h / 6.0, 1e-15);
  EXPECT_NEAR(f.M.diag(1), 4.0 * h / 6.0, 1e-15);
  EXPECT_NEAR(f.M.diag(2), 2.0 * h / 6.0, 1e-15);
  EXPECT_NEAR(f.M.off(0), h / 6.0, 1e-15);
  EXPECT_NEAR(f.M.off(1), h / 6.0, 1e-15);
  EXPECT_NEAR(f.A.diag(1), 2.0 / h, 1e-12);
  EXPECT_NEAR(f.A.off(0), -1.0 / h, 1e-12);
}

TEST(Assemble, MatchesIndependentQuadrature) {
  const auto w = WeightSpec::exp_poly(3, 0.5, 1.0, 2.0, 0.0, 0.0);
  const auto g = build_grid(1.0, 6, Grading::Geometric, 1.7, 3, 8);
  const auto f = assemble(g, w, OuterBc::Neumann);
  const double area = sphere_area(3);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double a = g.nodes[c], b = g.nodes[c + 1], h = b - a;
    auto rho = [&](double r) { return area * eval_weight(w, r) * r * r; };
    const double m01 = simpson(
        [&](double r) { return rho(r) * (b - r) * (r - a) / (h * h); }, a, b, 2000);
    const double s01 = simpson(
        [&](double r) { return rho(r) * (b - r) * (r - a) / (h * h * r * r); },
        a, b, 2000);
    const double k = simpson(rho, a, b, 2000) / (h * h);
    EXPECT_NEAR(f.M.off(c) / m01, 1.0, 1e-10) << c;
    EXPECT_NEAR(f.S.off(c) / s01, 1.0, 1e-10) << c;
    EXPECT_NEAR(-f.A.off(c) / k, 1.0, 1e-10) << c;
  }
}

TEST(Assemble, StiffnessAnnihilatesConstants) {
  const auto w = WeightSpec::exp_poly(4, 1.0, 0.5, 1.5, 0, -1);
  const auto g = build_grid(3.0, 200, Grading::Geometric, 1.05, 4);
  const auto f = assemble(g, w, OuterBc::Neumann);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(f.dofs());
  const Eigen::VectorXd r = f.A * ones;
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-12 * f.A.diag.cwiseAbs().maxCoeff());
}

TEST(Assemble, FormsArePositive) {
  const auto w = WeightSpec::constant(3);
  const auto g = build_grid(1.0, 50, Grading::Geometric, 1.2, 3);
  const auto f = assemble(g, w, OuterBc::Neumann);
  for (unsigned s = 0; s < 20; ++s) {
    const Eigen::VectorXd v = random_vector(f.dofs(), s);
    EXPECT_GE(f.A.quadratic(v), 0.0);
    EXPECT_GT(f.M.quadratic(v), 0.0);
    EXPECT_GT(f.S.quadratic(v), 0.0);
  }
  const Eigen::MatrixXd d = f.M.dense();
  EXPECT_EQ(d, d.transpose());
}

TEST(Assemble, SingularMassDominatesScaledMass) {
  const double R = 2.5;
  const auto w = WeightSpec::exp_poly(5, 1.0, 0, 1, 0, -1);
  const auto g = build_grid(R, 80, Grading::Geometric, 1.1, 5);
  const auto f = assemble(g, w, OuterBc::Neumann);
  const Eigen::MatrixXd diff = f.S.dense() - f.M.dense() / (R * R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
  EXPECT_GE(es.eigenvalues().minCoeff(),
            -1e-12 * f.S.diag.cwiseAbs().maxCoeff());
}

TEST(Assemble, DirichletDropsOuterNode) {
  const auto g = build_grid(1.0, 10, Grading::Uniform, 1.0, 3);
  const auto w = WeightSpec::constant(3);
  const auto n = assemble(g, w, OuterBc::Neumann);
  const auto d = assemble(g, w, OuterBc::Dirichlet);
  EXPECT_EQ(d.dofs(), 9);
  EXPECT_EQ(d.A.diag, n.A.diag.head(9));
  EXPECT_EQ(d.M.off, n.M.off.head(8));
}

TEST(Assemble, PotentialCapIsApplied) {
  const auto g = build_grid(1.0, 10, Grading::Geometric, 2.0, 3);
  const auto w = WeightSpec::constant(3);
  AssemblyOptions opt;
  opt.potential_cap = 1.0;
  const auto f = assemble(g, w, OuterBc::Neumann, opt);
  // 1/r^2 >= 1 on (0, 1], so the capped singular mass equals the mass
  EXPECT_LE((f.S.diag - f.M.diag).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assemble, NonFiniteCellReported) {
  const auto g = build_grid(1.0, 4, Grading::Geometric, 1e100, 3);
  ASSERT_LT(g.r1(), 1e-290);
  try {
    assemble(g, WeightSpec::constant(3), OuterBc::Neumann);
    FAIL() << "expected DomainError";
  } catch (const DomainError &e) {
    EXPECT_NE(std::string(e.what()).find("cell 0"), std::string::npos) << e.what();
  }
}

TEST(Project, InterpolatesNodes) {
  const auto g = build_grid(2.0, 5, Grading::Uniform, 1.0, 3);
  const auto v = project(g, [](double r) { return r * r; });
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_EQ(v(i), g.nodes[i] * g.nodes[i]);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Dirichlet);
  EXPECT_EQ(project(f, [](double r) { return r; }).size(), 4);
  EXPECT_THROW(project(g, [](double) { return NAN; }), DomainError);
}

TEST(Project, RayleighQuotientAboveSmallestEigenvalue) {
  const auto g = build_grid(1.0, 40, Grading::Uniform, 1.0, 3);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Dirichlet);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(f.A.dense(),
                                                               f.M.dense());
  const double lmin = es.eigenvalues()(0);
  for (auto fn : {+[](double r) { return 1.0 - r; },
                  +[](double r) { return std::cos(1.5 * r); },
                  +[](double r) { return 1.0 - r * r * r; }}) {
    const auto v = project(f, fn);
    EXPECT_GE(f.A.quadratic(v) / f.M.quadratic(v), lmin * (1.0 - 1e-12));
  }
}

TEST(WriteTriplets, FormatAndRoundTrip) {
  const auto g = build_grid(1.0, 4, Grading::Geometric, 3.0, 3);
  const auto f = assemble(g, WeightSpec::constant(3), OuterBc::Neumann);
  std::ostringstream os;
  write_triplets(os, f.M);
  std::istringstream is(os.str());
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(4, 4);
  int lines = 0, i, j;
  double v;
  while (is >> i >> j >> v) {
    back(i, j) = v;
    ++lines;
  }
  EXPECT_EQ(lines, 3 * 4 - 2);
  EXPECT_EQ(back, f.M.dense());
}
