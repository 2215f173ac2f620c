#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace sjsr;
using testutil::vec;

TEST(ProjectIntersection, HalfspaceProjectorAndBall) {
  // x1 >= 1 given as a bare projector.
  const ConvexSet half("x1>=1", [](const Vector& x) {
    Vector y = x;
    y(0) = std::max(y(0), 1.0);
    return y;
  });
  const std::vector<ConvexSet> sets{half, ConvexSet(Ball{Vector::Zero(2), 2.0})};
  const ProjectionResult r = project_intersection(Vector::Zero(2), sets, 1e-10, 20000);
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.point - vec({1, 0})).norm(), 1e-8);
}

TEST(ProjectIntersection, InteriorPointIsFixed) {
  const std::vector<ConvexSet> sets{ConvexSet(Ball{Vector::Zero(2), 2.0}), ConvexSet(Box{vec({-1, -1}), vec({1, 1})})};
  const Vector x0 = vec({0.3, -0.2});
  const ProjectionResult r = project_intersection(x0, sets, 1e-10, 100);
  EXPECT_EQ(r.point, x0);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(ProjectIntersection, DisjointSetsReportGap) {
  const double tol = 1e-8;
  const std::vector<ConvexSet> sets{ConvexSet(Halfspace{vec({1, 0}), -1.0}), ConvexSet(Halfspace{vec({-1, 0}), -1.0})};
  const ProjectionResult r = project_intersection(Vector::Zero(2), sets, tol, 2000);
  EXPECT_FALSE(r.converged);
  EXPECT_GE(r.residual, 1.0 - tol);
}

TEST(ProjectIntersection, Validation) {
  const std::vector<ConvexSet> none;
  EXPECT_THROW(project_intersection(Vector::Zero(2), none, 1e-8, 10), ParameterError);
  const std::vector<ConvexSet> one{ConvexSet(Ball{Vector::Zero(2), 1.0})};
  EXPECT_THROW(project_intersection(Vector::Zero(2), one, 0.0, 10), ParameterError);
  EXPECT_THROW(project_intersection(Vector::Zero(2), one, 1e-8, 0), ParameterError);
  EXPECT_THROW(ConvexSet(Ball{Vector::Zero(2), 0.0}), ParameterError);
  EXPECT_THROW(ConvexSet(Box{vec({1}), vec({0})}), ParameterError);
}

TEST(ProjectIntersection, MatchesActiveSetOracle) {
  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    const int d = 2 + t % 2;
    const Vector c = testutil::gaussian(d, 1, rng);
    const double r = 1.0 + rng.uniform();
    const int k = 1 + static_cast<int>(rng.uniform_index(3));
    Matrix rows = testutil::gaussian(k, d, rng);
    Vector b(k);
    std::vector<ConvexSet> sets{ConvexSet(Ball{c, r})};
    for (int i = 0; i < k; ++i) {
      b(i) = rows.row(i).dot(c) + 0.5 * rng.normal();  // keeps the intersection near the ball
      sets.emplace_back(ConvexSet(Halfspace{rows.row(i).transpose(), b(i)}));
    }
    const Vector x0 = c + 3.0 * testutil::gaussian(d, 1, rng);
    const auto ref = oracle::project_ball_halfspaces(x0, c, r, rows, b);
    const ProjectionResult got = project_intersection(x0, sets, 1e-10, 200000);
    if (!ref) {
      EXPECT_FALSE(got.converged);
      continue;
    }
    EXPECT_LE((got.point - *ref).norm(), 1e-6) << "instance " << t;
  }
}

TEST(ProjectIntersection, ShiftedPsdAndFrobeniusBall) {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const double cap = 2.0 + 3.0 * rng.uniform();
    const Matrix q = 3.0 * testutil::random_symmetric(2, rng);
    const std::vector<ConvexSet> sets{ConvexSet(ShiftedPsdCone{2}), ConvexSet(FrobeniusBall{cap})};
    const ProjectionResult got = project_intersection(svec(SymMatrix(q)).coords(), sets, 1e-11, 200000);
    const Matrix ref = oracle::project_psd_ball_spectral(q, cap);
    EXPECT_LE((smat_raw(got.point) - ref).norm(), 1e-6) << "instance " << t;
  }
}

TEST(ProjectIntersection, HalfspaceBlockMatchesNamedHalfspaces) {
  Rng rng(23);
  const Matrix normals = testutil::gaussian(3, 4, rng);
  const Vector offsets = Vector::Constant(4, 0.2);
  const std::vector<ConvexSet> ball{ConvexSet(Ball{Vector::Zero(3), 1.0})};
  std::vector<ConvexSet> named = ball;
  for (int i = 0; i < 4; ++i) named.emplace_back(ConvexSet(Halfspace{normals.col(i), 0.2}));
  const Vector x0 = vec({2, -1, 0.5});
  ProjectionOptions opts;
  opts.tol = 1e-11;
  opts.max_iter = 100000;
  const ProjectionResult a = project_intersection(x0, ball, HalfspaceBlock(normals, offsets), opts);
  const ProjectionResult b = project_intersection(x0, named, opts);
  EXPECT_LE((a.point - b.point).norm(), 1e-8);
}
