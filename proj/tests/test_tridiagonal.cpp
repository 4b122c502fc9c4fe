#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <random>

#include "hardylab/tridiagonal.hpp"

using namespace hardylab;

namespace {

SymTridiagonal random_symmetric(Eigen::Index n, std::mt19937_64 &gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymTridiagonal t(n);
  for (Eigen::Index i = 0; i < n; ++i)
    t.diag(i) = 2.0 * u(gen);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    t.off(i) = u(gen);
  return t;
}

SymTridiagonal random_spd(Eigen::Index n, std::mt19937_64 &gen) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  SymTridiagonal t(n);
  for (Eigen::Index i = 0; i < n; ++i)
    t.diag(i) = 2.5 + u(gen);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    t.off(i) = u(gen);
  return t;
}

Eigen::VectorXd dense_pencil_values(const SymTridiagonal &k,
                                    const SymTridiagonal &b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k.dense(),
                                                               b.dense());
  return es.eigenvalues();
}

} // namespace

TEST(SturmCount, MatchesDenseOracle) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 5 + trial;
    const auto k = random_symmetric(n, gen);
    const auto b = random_spd(n, gen);
    const Eigen::VectorXd ev = dense_pencil_values(k, b);
    for (double sigma : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
      Eigen::Index expect = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        expect += ev(i) < sigma;
      EXPECT_EQ(sturm_count(k, b, sigma), expect) << trial << " " << sigma;
    }
  }
}

TEST(PencilEigen, MatchesDenseOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index n = 3 + 4 * trial;
    const auto k = random_symmetric(n, gen);
    const auto b = random_spd(n, gen);
    const Eigen::VectorXd ev = dense_pencil_values(k, b);
    for (Eigen::Index idx : {Eigen::Index(0), Eigen::Index(1)}) {
      const auto eig = pencil_eigen(k, b, idx);
      EXPECT_NEAR(eig.value, ev(idx), 1e-12 * (1.0 + std::abs(ev(idx))));
      EXPECT_LE(eig.residual, 1e-10);
      const Eigen::VectorXd r = k * eig.vector - eig.value * (b * eig.vector);
      EXPECT_LE(r.norm(), 1e-9 * (1.0 + std::abs(eig.value)));
      EXPECT_NEAR(b.quadratic(eig.vector), 1.0, 1e-12);
    }
  }
}

TEST(PencilEigen, BadlyScaledPencil) {
  // geometric diagonal scaling over 30 orders of magnitude
  const Eigen::Index n = 60;
  SymTridiagonal k(n), b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::pow(10.0, -30.0 + 30.0 * double(i) / double(n - 1));
    k.diag(i) = 2.0 * s;
    b.diag(i) = 4.0 * s / 6.0;
    if (i + 1 < n) {
      const double s2 = std::sqrt(s * std::pow(10.0, -30.0 + 30.0 * double(i + 1) / double(n - 1)));
      k.off(i) = -s2;
      b.off(i) = s2 / 6.0;
    }
  }
  const auto eig = pencil_eigen(k, b);
  EXPECT_TRUE(std::isfinite(eig.value));
  EXPECT_LE(eig.residual, 1e-12);
  EXPECT_EQ(sturm_count(k, b, eig.value * (1.0 - 1e-9) - 1e-300), 0);
}

TEST(PencilEigen, SeedDoesNotChangeValue) {
  std::mt19937_64 gen(3);
  const auto k = random_symmetric(40, gen);
  const auto b = random_spd(40, gen);
  PencilOptions a, c;
  a.seed = 1;
  c.seed = 99;
  const auto e1 = pencil_eigen(k, b, 0, a);
  const auto e2 = pencil_eigen(k, b, 0, c);
  EXPECT_NEAR(e1.value, e2.value, 1e-13);
  EXPECT_LE((e1.vector - e2.vector).norm(), 1e-8);
  const auto again = pencil_eigen(k, b, 0, a);
  EXPECT_EQ(again.value, e1.value);
  EXPECT_EQ(again.vector, e1.vector);
}

TEST(PencilEigen, RejectsIndefiniteMass) {
  SymTridiagonal k(3), b(3);
  k.diag << 1, 2, 3;
  b.diag << 1, -1, 1;
  EXPECT_THROW(pencil_eigen(k, b), SolverError);
}

TEST(Solvers, TridiagonalMatchesDenseLu) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 4 + trial;
    const auto t = random_symmetric(n, gen);
    Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
    const Eigen::VectorXd expect = t.dense().partialPivLu().solve(rhs);
    ASSERT_TRUE(solve_tridiagonal(t.off, t.diag, t.off, rhs));
    EXPECT_LE((rhs - expect).norm(), 1e-10 * (1.0 + expect.norm()));
  }
}

TEST(Solvers, DefiniteSolve) {
  std::mt19937_64 gen(9);
  const auto t = random_spd(30, gen);
  ASSERT_TRUE(is_positive_definite(t));
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(30);
  const Eigen::VectorXd expect = t.dense().llt().solve(rhs);
  ASSERT_TRUE(solve_definite(t.off, t.diag, rhs));
  EXPECT_LE((rhs - expect).norm(), 1e-12 * expect.norm());

  SymTridiagonal bad = t;
  bad.diag(10) = -5.0;
  EXPECT_FALSE(is_positive_definite(bad));
  Eigen::VectorXd r2 = Eigen::VectorXd::Ones(30);
  EXPECT_FALSE(solve_definite(bad.off, bad.diag, r2));
}

TEST(SymTridiagonalOps, CombineAndLeading) {
  std::mt19937_64 gen(2);
  const auto x = random_symmetric(6, gen);
  const auto y = random_symmetric(6, gen);
  const auto z = combine(2.0, x, -0.5, y);
  EXPECT_LE((z.dense() - (2.0 * x.dense() - 0.5 * y.dense())).norm(), 1e-15);
  EXPECT_EQ(x.leading(4).dense(), x.dense().topLeftCorner(4, 4));
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
  EXPECT_NEAR(x.quadratic(v), v.dot(x.dense() * v), 1e-14);
  EXPECT_THROW(combine(1.0, x, 1.0, x.leading(3)), DomainError);
}
