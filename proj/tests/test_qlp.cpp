#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "test_util.hpp"

using namespace sjsr;
using testutil::vec;

namespace {

SampledConstraint scalar(double a, double b) { return {vec({a}), vec({b})}; }

QlpInstance interval(std::vector<SampledConstraint> cons) {
  return QlpInstance(1, std::move(cons), {ConvexSet(Box{vec({1}), vec({2})})});
}

SolveOptions with_oracle(LevelOracle o) {
  SolveOptions s;
  s.oracle = o;
  return s;
}

// Random 2-d instance: X is a disk in the positive quadrant, b_i > 0 so that
// b_i^T x > 0 on X.
struct Planar {
  Vector center;
  double radius;
  std::vector<SampledConstraint> cons;

  QlpInstance instance() const { return QlpInstance(2, cons, {ConvexSet(Ball{center, radius})}); }

  double ratio(const Vector& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& c : cons) worst = std::max(worst, c.a.dot(x) / c.b.dot(x));
    return worst;
  }
  bool inside(const Vector& x) const { return (x - center).norm() <= radius; }
};

Planar random_planar(Rng& rng, int n_cons) {
  Planar p;
  p.center = vec({2.5, 2.5}) + 0.5 * testutil::gaussian(2, 1, rng);
  p.radius = 0.8 + 0.4 * rng.uniform();
  for (int i = 0; i < n_cons; ++i) {
    p.cons.push_back({testutil::gaussian(2, 1, rng), vec({0.1 + rng.uniform(), 0.1 + rng.uniform()})});
  }
  return p;
}

// Minimizes g over {x : keep(x)} by a Cartesian grid over `box_center ± half`,
// then zooms in around the best point.
template <class G, class Keep>
std::pair<double, Vector> zoom_minimize(G g, Keep keep, Vector box_center, double half) {
  double best = std::numeric_limits<double>::infinity();
  Vector arg = box_center;
  for (int level = 0; level < 6; ++level) {
    const int steps = 200;
    const double h = 2.0 * half / steps;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        const Vector x = box_center + vec({-half + i * h, -half + j * h});
        if (!keep(x)) continue;
        const double v = g(x);
        if (v < best) {
          best = v;
          arg = x;
        }
      }
    }
    box_center = arg;
    half = 3.0 * h;
  }
  return {best, arg};
}

}  // namespace

TEST(QlpInstance, Validation) {
  EXPECT_THROW(QlpInstance(1, {}, {}), ParameterError);
  // 0 in X.
  EXPECT_THROW(QlpInstance(1, {}, {ConvexSet(Box{vec({-1}), vec({1})})}), ParameterError);
  // Empty X.
  EXPECT_THROW(QlpInstance(1, {}, {ConvexSet(Box{vec({1}), vec({2})}), ConvexSet(Box{vec({3}), vec({4})})}),
               ParameterError);
  EXPECT_THROW(interval({{vec({1, 2}), vec({1})}}), DimensionError);
  EXPECT_THROW(QlpInstance(2, {}, {ConvexSet(Box{vec({1}), vec({2})})}), DimensionError);
}

TEST(QlpInstance, JsrContractBPositiveOnX) {
  Rng rng(41);
  const SwitchedSystem sys = testutil::random_jsr_system(2, rng);
  const SampleSet obs = observe_many(sys, 10, rng);
  const QlpInstance inst = build_qlp(obs, 20.0);
  for (int t = 0; t < 200; ++t) {
    // A point of X: I + R R^T scaled into the ball.
    const Matrix r = testutil::gaussian(2, 2, rng);
    Matrix p = Matrix::Identity(2, 2) + r * r.transpose();
    if (p.norm() > 20.0) p *= 20.0 / p.norm();
    if (Eigen::SelfAdjointEigenSolver<Matrix>(p).eigenvalues()(0) < 1.0) continue;
    const Vector x = svec(SymMatrix(p)).coords();
    EXPECT_GT((inst.b_matrix().transpose() * x).minCoeff(), 0.0);
  }
}

class BothOracles : public ::testing::TestWithParam<LevelOracle> {};

TEST_P(BothOracles, FeasibleAtExamples) {
  const SolveOptions o = with_oracle(GetParam());
  const FeasibilityProbe empty = feasible_at(interval({}), 0.0, o);
  EXPECT_TRUE(empty.feasible);
  EXPECT_NEAR(empty.witness(0), 1.0, 1e-8);

  const QlpInstance one = interval({scalar(3, 1)});
  EXPECT_FALSE(feasible_at(one, 2.0, o).feasible);
  const FeasibilityProbe at3 = feasible_at(one, 3.0, o);
  EXPECT_TRUE(at3.feasible);
  EXPECT_NEAR(at3.witness(0), 1.0, 1e-8);
  EXPECT_THROW(feasible_at(one, -1.0, o), ParameterError);
}

TEST_P(BothOracles, SolveExamples) {
  const SolveOptions o = with_oracle(GetParam());
  const QlpSolution s = solve(interval({scalar(3, 1), scalar(1, 1)}), o);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.lambda_star, 3.0, 3.0 * 2e-6);
  EXPECT_NEAR(s.x_star(0), 1.0, 1e-8);

  const QlpSolution e = solve(interval({}), o);
  EXPECT_EQ(e.lambda_star, 0.0);
  EXPECT_NEAR(e.x_star(0), 1.0, 1e-8);

  // n = 1 JSR instance: x = 1, y = 0.5, X = [1, C].
  SampleSet obs;
  obs.n = 1;
  obs.observations.push_back({vec({1.0}), vec({0.5})});
  const QlpSolution j = solve(build_qlp(obs, 10.0), o);
  EXPECT_NEAR(j.lambda_star, 0.25, 0.25 * 2e-6);
  EXPECT_NEAR(j.x_star(0), 1.0, 1e-7);
}

TEST_P(BothOracles, InfeasibleAndBracketErrors) {
  const SolveOptions o = with_oracle(GetParam());
  // a = 1, b = 0 is never satisfiable on [1, 2].
  EXPECT_THROW(solve(interval({scalar(1, 0)}), o), InfeasibleError);
  SolveOptions bad = o;
  bad.lambda_hi = 0.0;
  EXPECT_THROW(solve(interval({scalar(3, 1)}), bad), ParameterError);
  bad.lambda_hi = std::nan("");
  EXPECT_THROW(solve(interval({scalar(3, 1)}), bad), ParameterError);
}

INSTANTIATE_TEST_SUITE_P(Oracles, BothOracles, ::testing::Values(LevelOracle::Auto, LevelOracle::Dykstra),
                         [](const auto& info) { return info.param == LevelOracle::Auto ? "Barrier" : "Dykstra"; });

TEST(Solve, SolutionInvariants) {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const Planar p = random_planar(rng, 5);
    const QlpSolution s = solve(p.instance());
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_GE(s.lambda_star, 0.0);
    EXPECT_LE(s.max_violation, 1e-7 * (1.0 + s.x_star.norm()));
    EXPECT_LE(s.set_residual, 1e-7 * (1.0 + s.x_star.norm()));
  }
}

TEST(Solve, LambdaMatchesGridScan) {
  Rng rng(43);
  for (int t = 0; t < 12; ++t) {
    const Planar p = random_planar(rng, 4);
    const QlpSolution s = solve(p.instance());
    const auto [fmin, arg] = zoom_minimize([&](const Vector& x) { return p.ratio(x); },
                                           [&](const Vector& x) { return p.inside(x); }, p.center, p.radius);
    const double grid = std::max(0.0, fmin);
    // A grid point is feasible at its own ratio, so lambda* can only be lower.
    EXPECT_LE(s.lambda_star, grid + 1e-6 * (1.0 + grid)) << "instance " << t;
    EXPECT_GE(s.lambda_star, grid - 1e-5 * (1.0 + grid)) << "instance " << t;
  }
}

TEST(Solve, WitnessIsMinimumNormAgainstPolarGrid) {
  Rng rng(44);
  for (int t = 0; t < 12; ++t) {
    const Planar p = random_planar(rng, 4);
    const QlpInstance inst = p.instance();
    const QlpSolution s = solve(inst);
    const double level = s.lambda_star + 0.05 * (1.0 + s.lambda_star);
    const FeasibilityProbe probe = feasible_at(inst, level);
    ASSERT_TRUE(probe.feasible);
    auto feasible = [&](const Vector& x) { return p.inside(x) && p.ratio(x) <= level; };

    // Coarse polar sweep of the disk for a starting point, then zoom.
    double best = std::numeric_limits<double>::infinity();
    Vector arg = p.center;
    for (int i = 0; i <= 300; ++i) {
      for (int j = 0; j < 720; ++j) {
        const double rho = p.radius * i / 300.0;
        const double th = 2.0 * M_PI * j / 720.0;
        const Vector x = p.center + rho * vec({std::cos(th), std::sin(th)});
        if (feasible(x) && x.squaredNorm() < best) {
          best = x.squaredNorm();
          arg = x;
        }
      }
    }
    const auto refined =
        zoom_minimize([](const Vector& x) { return x.squaredNorm(); }, feasible, arg, 3.0 * p.radius / 300.0);
    best = std::min(best, refined.first);
    const double got = probe.witness.squaredNorm();
    EXPECT_LE(got, best + 1e-9) << "instance " << t;
    EXPECT_LE(best - got, 1e-3) << "instance " << t;
  }
}

TEST(Solve, FeasibilityIsMonotoneInLambda) {
  Rng rng(45);
  for (int t = 0; t < 10; ++t) {
    const Planar p = random_planar(rng, 5);
    const QlpInstance inst = p.instance();
    bool seen = false;
    for (int k = 0; k <= 40; ++k) {
      const bool f = feasible_at(inst, 0.1 * k).feasible;
      if (seen) {
        EXPECT_TRUE(f) << "instance " << t << " level " << 0.1 * k;
      }
      seen = seen || f;
    }
  }
}

TEST(Solve, DroppingASlackConstraintKeepsTheOptimum) {
  Rng rng(46);
  for (int t = 0; t < 10; ++t) {
    const SwitchedSystem sys = testutil::random_jsr_system(2, rng);
    const QlpInstance inst = build_qlp(observe_many(sys, 8, rng), 20.0);
    const QlpSolution full = solve(inst);
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const auto& c = inst.constraints()[i];
      // Only clearly slack rows; a row a hair below lambda* is active in the limit.
      const double ratio = c.a.dot(full.x_star) / c.b.dot(full.x_star);
      if (full.lambda_star - ratio < 1e-2 * (1.0 + full.lambda_star)) continue;
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < inst.size(); ++j) {
        if (j != i) rest.push_back(j);
      }
      const QlpSolution again = solve(inst.subset(rest));
      EXPECT_NEAR(again.lambda_star, full.lambda_star, 1e-5 * (1.0 + full.lambda_star));
      EXPECT_LE((again.x_star - full.x_star).norm(), 1e-3 * (1.0 + full.x_star.norm()));
    }
  }
}

TEST(Violates, Examples) {
  QlpSolution sol;
  sol.lambda_star = 3.0;
  sol.x_star = vec({1.0});
  EXPECT_TRUE(violates(sol, scalar(5, 1)));
  EXPECT_FALSE(violates(sol, scalar(2, 1)));
  sol.status = SolveStatus::FeasibilityUncertain;
  EXPECT_THROW(violates(sol, scalar(5, 1)), StateError);
}

TEST(Violates, AgreesWithResolve) {
  Rng rng(47);
  int compared = 0;
  for (int t = 0; t < 50; ++t) {
    const SwitchedSystem sys = testutil::random_jsr_system(2, rng);
    const QlpInstance inst = build_qlp(observe_many(sys, 6, rng), 20.0);
    const QlpSolution sol = solve(inst);
    const SampledConstraint delta = lyapunov_constraint(observe(sys, rng));
    const double scale = (delta.a.norm() + sol.lambda_star * delta.b.norm()) * sol.x_star.norm();
    const double margin = delta.a.dot(sol.x_star) - sol.lambda_star * delta.b.dot(sol.x_star);
    if (std::abs(margin) < 1e-5 * scale) continue;  // too close to call either way
    const QlpSolution more = solve(inst.with_constraint(delta));
    const bool lambda_up = more.lambda_star > sol.lambda_star * (1.0 + 1e-5) + 1e-12;
    const bool cost_up = std::abs(more.lambda_star - sol.lambda_star) <= 1e-5 * sol.lambda_star &&
                         more.cost() > sol.cost() * (1.0 + 1e-6);
    EXPECT_EQ(violates(sol, delta), lambda_up || cost_up) << "instance " << t;
    ++compared;
  }
  EXPECT_GE(compared, 40);
}

TEST(ViolationProbability, EdgeCasesAndConcentration) {
  QlpSolution sol;
  sol.lambda_star = 3.0;
  sol.x_star = vec({1.0});
  Rng rng(48);
  const ConstraintSampler never = [](Rng& r) { return scalar(3.0 * r.uniform(), 1.0); };
  EXPECT_EQ(estimate_violation_probability(sol, never, 500, rng), 0.0);
  const ConstraintSampler always = [](Rng&) { return scalar(5, 1); };
  EXPECT_EQ(estimate_violation_probability(sol, always, 500, rng), 1.0);
  const ConstraintSampler half = [](Rng& r) { return r.uniform() < 0.5 ? scalar(5, 1) : scalar(2, 1); };
  const std::size_t m = 4000;
  const double v = estimate_violation_probability(sol, half, m, rng);
  EXPECT_NEAR(v, 0.5, 3.0 * std::sqrt(0.25 / m));
  EXPECT_THROW(estimate_violation_probability(sol, half, 0, rng), ParameterError);

  Rng a(5), b(5);
  EXPECT_EQ(estimate_violation_probability(sol, half, 300, a), estimate_violation_probability(sol, half, 300, b));
}

TEST(EssentialSet, SingleBindingConstraint) {
  const QlpInstance inst =
      interval({scalar(1, 1), scalar(2, 1), scalar(3, 1), scalar(0.5, 1), scalar(2.5, 1), scalar(1.5, 1)});
  const EssentialSet ex = essential_set_exhaustive(inst);
  EXPECT_EQ(ex.indices, std::vector<std::size_t>{2});
  EXPECT_NEAR(ex.lambda, 3.0, 1e-5);
  const EssentialSet gr = essential_set_greedy(inst);
  EXPECT_EQ(gr.indices, std::vector<std::size_t>{2});
}

TEST(EssentialSet, EmptyInstance) {
  const EssentialSet ex = essential_set_exhaustive(interval({}));
  EXPECT_TRUE(ex.indices.empty());
  EXPECT_EQ(ex.lambda, 0.0);
  EXPECT_TRUE(essential_set_greedy(interval({})).indices.empty());
}

TEST(EssentialSet, SizeCap) {
  std::vector<SampledConstraint> many(21, scalar(1, 1));
  EXPECT_THROW(essential_set_exhaustive(interval(many)), ParameterError);
}

TEST(EssentialSet, RandomJsrInstancesStayWithinD) {
  Rng rng(49);
  for (int t = 0; t < 15; ++t) {
    const SwitchedSystem sys = testutil::random_jsr_system(2, rng);
    const QlpInstance inst = build_qlp(observe_many(sys, 8, rng), 20.0);
    const QlpSolution full = solve(inst);
    const EssentialSet ex = essential_set_exhaustive(inst);
    EXPECT_LE(ex.indices.size(), 3u) << "instance " << t;
    EXPECT_NEAR(ex.lambda, full.lambda_star, 1e-5 * (1.0 + full.lambda_star));

    const EssentialSet gr = essential_set_greedy(inst);
    EXPECT_LE(gr.indices.size(), inst.size());
    EXPECT_GE(gr.indices.size(), ex.indices.size());
    EXPECT_NEAR(gr.lambda, full.lambda_star, 1e-5 * (1.0 + full.lambda_star));
  }
}
