#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace sjsr;

TEST(ProjectionMatrix, OrthonormalComplementOfOnes) {
  for (int n : {2, 3, 8}) {
    const Matrix b = projection_matrix(n);
    ASSERT_EQ(b.rows(), n - 1);
    ASSERT_EQ(b.cols(), n);
    EXPECT_LE((b * b.transpose() - Matrix::Identity(n - 1, n - 1)).norm(), 1e-13);
    EXPECT_LE((b * Vector::Ones(n)).norm(), 1e-13);
  }
  EXPECT_THROW(projection_matrix(1), ParameterError);
}

TEST(RowStochastic, RowsAreAverages) {
  Rng rng(81);
  const SwitchedSystem sys = random_row_stochastic(6, 4, 0.5, rng);
  ASSERT_EQ(sys.m(), 4u);
  for (const Matrix& a : sys.modes()) {
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_LE((a * Vector::Ones(6) - Vector::Ones(6)).norm(), 1e-14);
    for (int i = 0; i < 6; ++i) EXPECT_GT(a(i, i), 0.0);
  }
  EXPECT_THROW(random_row_stochastic(6, 4, 0.0, rng), ParameterError);
}

TEST(ProjectSystem, ConjugatesModes) {
  Rng rng(82);
  const SwitchedSystem sys = random_row_stochastic(5, 2, 0.5, rng);
  const Matrix b = projection_matrix(5);
  const SwitchedSystem p = project_system(sys, b);
  for (std::size_t i = 0; i < 2; ++i) {
    // B A = (B A B^T) B when A 1 = 1.
    EXPECT_LE((b * sys.mode(i) - p.mode(i) * b).norm(), 1e-13);
  }
}

TEST(ProjectPair, NormalizesOrDrops) {
  const Matrix b = projection_matrix(3);
  EXPECT_FALSE(project_pair(Vector::Ones(3), Vector::Ones(3), b).has_value());
  const Vector x = testutil::vec({1.0, 0.0, 0.0});
  const auto o = project_pair(x, 2.0 * x, b);
  ASSERT_TRUE(o.has_value());
  EXPECT_NEAR(o->x.norm(), 1.0, 1e-14);
  EXPECT_LE((o->y - 2.0 * o->x).norm(), 1e-14);
  EXPECT_THROW(project_pair(Vector::Ones(2), Vector::Ones(3), b), DimensionError);
}

TEST(Sweep, SmallConfiguration) {
  NetworkConfig cfg;
  cfg.n = 4;
  cfg.m = 2;
  cfg.N_grid = {60, 400};
  cfg.K = 6;
  cfg.seed = 3;
  const SweepResult r = consensus_sweep(cfg);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.projected.n(), 3);
  EXPECT_LE(r.bracket.lower, r.bracket.upper + 1e-12);
  for (const SweepRow& row : r.rows) {
    EXPECT_LT(row.eps1, *row.eps2);
    if (row.bound1 && row.bound2) {
      EXPECT_LE(*row.bound1, *row.bound2 + 1e-12);
    }
    EXPECT_EQ(row.whitebox_lower, r.bracket.lower);
    EXPECT_LE(row.gamma_star, r.bracket.upper * (1.0 + 1e-6));
  }
  const SweepResult again = consensus_sweep(cfg);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(r.rows[i].gamma_star, again.rows[i].gamma_star);
}

TEST(Sweep, ConfigErrors) {
  NetworkConfig cfg;
  cfg.n = 3;
  cfg.m = 1;
  cfg.identity_modes = true;
  cfg.N_grid = {10};
  EXPECT_THROW(consensus_sweep(cfg), ConfigError);
  NetworkConfig small;
  small.n = 4;
  small.N_grid = {3};  // below d = 6
  EXPECT_THROW(consensus_sweep(small), ConfigError);
  small.N_grid = {};
  EXPECT_THROW(consensus_sweep(small), ConfigError);
}

TEST(ProjectionMatrix, TwoNodesByHand) {
  const Matrix b = projection_matrix(2);
  const double s = 1.0 / std::sqrt(2.0);
  const double sign = b(0, 0) > 0 ? 1.0 : -1.0;
  EXPECT_NEAR(b(0, 0), sign * s, 1e-15);
  EXPECT_NEAR(b(0, 1), -sign * s, 1e-15);
  const auto o = project_pair(testutil::vec({1.0, 0.0}), testutil::vec({0.5, 0.5}), b);
  ASSERT_TRUE(o.has_value());
  EXPECT_NEAR(std::abs(o->x(0)), 1.0, 1e-15);
}

TEST(RowStochastic, CompleteGraphAverages) {
  Rng rng(83);
  const SwitchedSystem sys = random_row_stochastic(5, 2, 1.0, rng);
  for (const Matrix& a : sys.modes()) EXPECT_LE((a - Matrix::Constant(5, 5, 0.2)).norm(), 1e-15);
}

TEST(ProjectPair, PreservesDynamics) {
  Rng rng(84);
  const SwitchedSystem sys = random_row_stochastic(6, 1, 0.5, rng);
  const Matrix b = projection_matrix(6);
  const Matrix ap = b * sys.mode(0) * b.transpose();
  for (int t = 0; t < 100; ++t) {
    const Vector x = sample_uniform_sphere(6, rng);
    const auto o = project_pair(x, sys.mode(0) * x, b);
    ASSERT_TRUE(o.has_value());
    EXPECT_LE((o->y - ap * o->x).norm(), 1e-10);
  }
}

TEST(ObserveProjected, InputsAreIsotropic) {
  Rng rng(85);
  const int n = 5;
  const SwitchedSystem sys = random_row_stochastic(n, 2, 0.5, rng);
  const std::size_t count = 100000;
  const SampleSet s = observe_projected(sys, projection_matrix(n), count, rng);
  Vector mean = Vector::Zero(n - 1);
  Matrix second = Matrix::Zero(n - 1, n - 1);
  for (const Observation& o : s.observations) {
    mean += o.x;
    second += o.x * o.x.transpose();
  }
  mean /= static_cast<double>(count);
  second /= static_cast<double>(count);
  // Coordinates of a uniform point on S^{k-1} have variance 1/k; squared
  // coordinates have variance below 1/k.
  const double k = n - 1;
  const double se = std::sqrt(1.0 / k / count);
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 5.0 * se);
  EXPECT_LE((second - Matrix::Identity(n - 1, n - 1) / k).cwiseAbs().maxCoeff(), 5.0 * se);
}
