#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenario_jsr/barrier.hpp"
#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/projection.hpp"
#include "scenario_jsr/rng.hpp"
#include "scenario_jsr/symmat.hpp"

namespace sjsr {

/// One sampled constraint a^T x <= lambda * b^T x.
struct SampledConstraint {
  Vector a;
  Vector b;
};

/// Sampled quasi-linear problem:
///
///   minimize (lambda, |x|^2) lexicographically
///   s.t. x in X,  a_i^T x <= lambda * b_i^T x  for every sampled i,  lambda >= 0,
///
/// where X is the intersection of `common_set`. X must be nonempty, compact
/// and convex with 0 not in X, and b_i^T x > 0 must hold on X; the
/// constructor checks the first two properties by projecting the origin onto X.
class QlpInstance {
 public:
  QlpInstance(int dim, std::vector<SampledConstraint> constraints, std::vector<ConvexSet> common_set)
      : QlpInstance(Unchecked{}, dim, std::move(constraints), std::move(common_set), Vector{}) {
    if (common_set_.empty()) throw ParameterError("QlpInstance: common set must not be empty");
    for (const ConvexSet& s : common_set_) {
      if (auto sd = s.dim(); sd && *sd != dim_) {
        throw DimensionError("QlpInstance: common set '" + s.name() + "' has the wrong dimension");
      }
    }
    ProjectionOptions probe;
    probe.tol = 1e-10;
    probe.max_iter = 20000;
    const ProjectionResult r = project_intersection(Vector::Zero(dim_), common_set_, probe);
    if (!(r.relative_residual() <= 1e-8)) {
      throw ParameterError("QlpInstance: common set appears to be empty (projection residual " +
                           std::to_string(r.residual) + ")");
    }
    if (!(r.point.norm() > 1e-12)) throw ParameterError("QlpInstance: the origin belongs to the common set");
    anchor_ = r.point;
    if (auto model = barrier::make_model(common_set_, dim_)) {
      if (auto inner = barrier::interior_point(*model, anchor_)) {
        barrier_ = std::make_shared<const BarrierData>(BarrierData{std::move(*model), std::move(*inner)});
      }
    }
  }

  /// Barrier model of X and a point in its interior; present when every set
  /// has a descriptor and X has nonempty interior.
  struct BarrierData {
    barrier::SetModel model;
    Vector interior;
  };

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return constraints_.size(); }
  const std::vector<SampledConstraint>& constraints() const noexcept { return constraints_; }
  const std::vector<ConvexSet>& common_set() const noexcept { return common_set_; }
  /// Columns a_i (resp. b_i), d x N.
  const Matrix& a_matrix() const noexcept { return a_; }
  const Matrix& b_matrix() const noexcept { return b_; }
  /// Projection of the origin onto X, found when the instance was built.
  const Vector& anchor() const noexcept { return anchor_; }
  const BarrierData* barrier_data() const noexcept { return barrier_.get(); }

  /// Instance restricted to the listed constraint ids (in the given order).
  QlpInstance subset(std::span<const std::size_t> indices) const {
    std::vector<SampledConstraint> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= constraints_.size()) throw ParameterError("QlpInstance::subset: index out of range");
      picked.push_back(constraints_[i]);
    }
    return QlpInstance(Unchecked{}, dim_, std::move(picked), common_set_, anchor_, barrier_);
  }

  QlpInstance with_constraint(SampledConstraint extra) const {
    std::vector<SampledConstraint> all = constraints_;
    all.push_back(std::move(extra));
    return QlpInstance(Unchecked{}, dim_, std::move(all), common_set_, anchor_, barrier_);
  }

 private:
  struct Unchecked {};

  QlpInstance(Unchecked, int dim, std::vector<SampledConstraint> constraints,
              std::vector<ConvexSet> common_set, Vector anchor,
              std::shared_ptr<const BarrierData> barrier = nullptr)
      : dim_(dim),
        constraints_(std::move(constraints)),
        common_set_(std::move(common_set)),
        anchor_(std::move(anchor)),
        barrier_(std::move(barrier)) {
    if (dim_ < 1) throw ParameterError("QlpInstance: dimension must be positive");
    const auto n = static_cast<Eigen::Index>(constraints_.size());
    a_.resize(dim_, n);
    b_.resize(dim_, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const SampledConstraint& c = constraints_[static_cast<std::size_t>(i)];
      if (c.a.size() != dim_ || c.b.size() != dim_) {
        throw DimensionError("QlpInstance: constraint " + std::to_string(i) + " has the wrong length");
      }
      a_.col(i) = c.a;
      b_.col(i) = c.b;
    }
  }

  int dim_;
  std::vector<SampledConstraint> constraints_;
  std::vector<ConvexSet> common_set_;
  Matrix a_;
  Matrix b_;
  Vector anchor_;
  std::shared_ptr<const BarrierData> barrier_;
};

/// Level oracle used by feasible_at and solve. Auto picks the barrier method
/// when the instance carries a barrier model and Dykstra otherwise.
enum class LevelOracle { Auto, Dykstra };

struct SolveOptions {
  /// Final bracket width, relative to the upper end of the initial bracket
  /// (in the bisection variable).
  double tol_lambda_rel = 1e-6;
  /// Feasibility threshold on max distance to the sets, relative to 1 + |x|.
  /// Projections run to tol_feas / 10; residuals between the two are
  /// feasible but uncertain.
  double tol_feas = 1e-7;
  int max_iter = 20000;
  /// Caller-supplied upper end of the lambda bracket; probed by doubling
  /// from 1 when absent.
  std::optional<double> lambda_hi;
  /// Bisect on sqrt(lambda) instead of lambda.
  bool bisect_on_root = false;
  /// Forwarded to ProjectionOptions::early_exit.
  bool early_exit = true;
  LevelOracle oracle = LevelOracle::Auto;
};

struct FeasibilityProbe {
  bool feasible = false;
  /// Dykstra: residual within the projection tolerance (tol_feas / 10).
  /// Barrier: the witness is strictly feasible.
  bool clean = false;
  Vector witness;
  /// Dykstra: max distance to the sets. Barrier: max normalized slack h_i^T x / |h_i|, positive part.
  double residual = 0.0;
  /// Dykstra cycles or Newton steps.
  int cycles = 0;
};

enum class SolveStatus { Optimal, FeasibilityUncertain };

inline std::string to_string(SolveStatus s) {
  return s == SolveStatus::Optimal ? "Optimal" : "FeasibilityUncertain";
}

struct QlpSolution {
  double lambda_star = 0.0;
  Vector x_star;
  /// max_i (a_i - lambda* b_i)^T x*, positive part.
  double max_violation = 0.0;
  /// max distance from x* to the sets making up X.
  double set_residual = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  /// lambda_star minus the largest lambda classified infeasible.
  double bracket_width = 0.0;
  int probes = 0;

  double cost() const { return x_star.squaredNorm(); }
};

namespace detail {

inline bool uses_barrier(const QlpInstance& inst, const SolveOptions& opts) {
  return opts.oracle == LevelOracle::Auto && inst.barrier_data() != nullptr;
}

inline FeasibilityProbe probe_dykstra(const QlpInstance& inst, double lambda, const SolveOptions& opts) {
  HalfspaceBlock block(inst.a_matrix() - lambda * inst.b_matrix(), Vector::Zero(static_cast<Eigen::Index>(inst.size())));
  ProjectionOptions popts;
  popts.tol = opts.tol_feas / 10.0;
  popts.max_iter = opts.max_iter;
  popts.early_exit = opts.early_exit;
  const ProjectionResult r = project_intersection(Vector::Zero(inst.dim()), inst.common_set(), block, popts);
  FeasibilityProbe out;
  out.residual = r.residual;
  out.cycles = r.cycles;
  out.witness = r.point;
  const double rel = r.relative_residual();
  out.feasible = rel <= opts.tol_feas;
  out.clean = rel <= popts.tol;
  return out;
}

// Barrier probe. A strictly feasible witness is clean; an undecided one counts
// as feasible when its slack is within tol_feas. With min_norm the witness is
// replaced by the minimum-norm point of the level set.
inline FeasibilityProbe probe_barrier(const QlpInstance& inst, double lambda, const SolveOptions& opts,
                                      bool min_norm) {
  const auto& bd = *inst.barrier_data();
  const Matrix h = (inst.a_matrix() - lambda * inst.b_matrix()).transpose();
  const barrier::LevelResult r = barrier::level_feasibility(bd.model, bd.interior, h);
  FeasibilityProbe out;
  out.cycles = r.newton;
  out.witness = r.x;
  switch (r.verdict) {
    case barrier::Verdict::Feasible:
      out.feasible = out.clean = true;
      if (min_norm) out.witness = barrier::min_norm_point(bd.model, r.x, h);
      break;
    case barrier::Verdict::Infeasible:
      out.residual = r.slack;
      break;
    case barrier::Verdict::Undecided:
      out.residual = std::max(0.0, r.slack);
      out.feasible = out.residual <= opts.tol_feas * (1.0 + r.x.norm());
      break;
  }
  return out;
}

inline FeasibilityProbe probe(const QlpInstance& inst, double lambda, const SolveOptions& opts, bool min_norm) {
  if (uses_barrier(inst, opts)) return probe_barrier(inst, lambda, opts, min_norm);
  return probe_dykstra(inst, lambda, opts);
}

}  // namespace detail

/// Feasibility of the level-lambda problem X ∩ {x : (a_i - lambda b_i)^T x <= 0}.
/// The witness is the (approximate) minimum-norm feasible point.
///
/// With the Dykstra oracle this projects the origin onto the level set;
/// `clean` means the residual met the projection tolerance tol_feas / 10.
/// With the barrier oracle `clean` means a strictly feasible point was found,
/// and an infeasible answer is backed by the duality gap.
inline FeasibilityProbe feasible_at(const QlpInstance& inst, double lambda, const SolveOptions& opts = {}) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("feasible_at: lambda must be >= 0");
  return detail::probe(inst, lambda, opts, true);
}

namespace detail {

inline QlpSolution finish_solution(const QlpInstance& inst, double lambda, const FeasibilityProbe& probe,
                                   double lambda_lo, int probes) {
  QlpSolution sol;
  sol.lambda_star = lambda;
  sol.x_star = probe.witness;
  sol.status = probe.clean ? SolveStatus::Optimal : SolveStatus::FeasibilityUncertain;
  sol.bracket_width = lambda - lambda_lo;
  sol.probes = probes;
  if (inst.size() > 0) {
    const Vector v = (inst.a_matrix() - lambda * inst.b_matrix()).transpose() * sol.x_star;
    sol.max_violation = std::max(0.0, v.maxCoeff());
  }
  for (const ConvexSet& s : inst.common_set()) sol.set_residual = std::max(sol.set_residual, s.distance(sol.x_star));
  return sol;
}

inline void check_options(const SolveOptions& opts) {
  if (!(opts.tol_lambda_rel > 0.0) || !(opts.tol_feas > 0.0) || opts.max_iter < 1) {
    throw ParameterError("SolveOptions: tolerances and max_iter must be positive");
  }
}

}  // namespace detail

/// Lexicographic optimum of the sampled problem.
///
/// Bisects the level on [0, lambda_hi]. With the barrier oracle only strictly
/// feasible levels move the upper end, and x* is the minimum-norm point at the
/// final upper end. With Dykstra the smallest level whose projection met the
/// projection tolerance is reported with the point found there; when no probe
/// met that tolerance the status is FeasibilityUncertain.
inline QlpSolution solve(const QlpInstance& inst, const SolveOptions& opts = {}) {
  detail::check_options(opts);
  const bool strict = detail::uses_barrier(inst, opts);
  auto accepted = [strict](const FeasibilityProbe& p) { return strict ? p.clean : p.feasible; };
  int probes = 0;

  FeasibilityProbe at_zero = detail::probe(inst, 0.0, opts, true);
  ++probes;
  if (inst.size() == 0 || accepted(at_zero)) {
    return detail::finish_solution(inst, 0.0, at_zero, 0.0, probes);
  }

  double hi = 1.0;
  if (opts.lambda_hi) {
    hi = *opts.lambda_hi;
    if (!std::isfinite(hi) || !(hi > 0.0)) {
      throw ParameterError("solve: degenerate bracket [0, " + std::to_string(hi) + "]");
    }
  }
  constexpr double kCap = 1152921504606846976.0;  // 2^60
  FeasibilityProbe top = detail::probe(inst, hi, opts, false);
  ++probes;
  while (!accepted(top)) {
    if (hi >= kCap) throw InfeasibleError("solve: no feasible level up to 2^60");
    hi = std::min(2.0 * hi, kCap);
    top = detail::probe(inst, hi, opts, false);
    ++probes;
  }

  auto to_var = [&](double lam) { return opts.bisect_on_root ? std::sqrt(lam) : lam; };
  auto to_lambda = [&](double t) { return opts.bisect_on_root ? t * t : t; };

  double t_lo = 0.0;
  double t_hi = to_var(hi);
  const double width = opts.tol_lambda_rel * t_hi;
  FeasibilityProbe hi_probe = top;
  std::optional<std::pair<double, FeasibilityProbe>> best_clean;
  if (top.clean) best_clean.emplace(hi, top);

  while (t_hi - t_lo > width) {
    const double t_mid = 0.5 * (t_lo + t_hi);
    if (!(t_mid > t_lo && t_mid < t_hi)) break;
    const double lam = to_lambda(t_mid);
    FeasibilityProbe p = detail::probe(inst, lam, opts, false);
    ++probes;
    if (accepted(p)) {
      t_hi = t_mid;
      if (p.clean) best_clean.emplace(lam, p);
      hi_probe = std::move(p);
    } else {
      t_lo = t_mid;
    }
  }

  const double lambda_lo = to_lambda(t_lo);
  if (strict) {
    const double lam = to_lambda(t_hi);
    const auto& bd = *inst.barrier_data();
    const Matrix h = (inst.a_matrix() - lam * inst.b_matrix()).transpose();
    hi_probe.witness = barrier::min_norm_point(bd.model, hi_probe.witness, h);
    return detail::finish_solution(inst, lam, hi_probe, lambda_lo, probes);
  }
  if (best_clean) return detail::finish_solution(inst, best_clean->first, best_clean->second, lambda_lo, probes);
  return detail::finish_solution(inst, to_lambda(t_hi), hi_probe, lambda_lo, probes);
}

/// Default violation tolerance: 1e-9 * max(1, (|a| + lambda* |b|) |x*|).
inline double default_violation_tolerance(const QlpSolution& sol, const SampledConstraint& delta) {
  const double scale = (delta.a.norm() + sol.lambda_star * delta.b.norm()) * sol.x_star.norm();
  return 1e-9 * std::max(1.0, scale);
}

/// Whether adding delta would change the optimum: a^T x* > lambda* b^T x* + tol.
/// A satisfied constraint leaves the (unique) optimum in place, and a violated
/// one strictly raises the lexicographic cost, so this matches the
/// cost-increase definition of violation.
inline bool violates(const QlpSolution& sol, const SampledConstraint& delta,
                     std::optional<double> tol_viol = std::nullopt) {
  if (sol.status != SolveStatus::Optimal) throw StateError("violates: solution is not Optimal");
  if (delta.a.size() != sol.x_star.size() || delta.b.size() != sol.x_star.size()) {
    throw DimensionError("violates: constraint dimension mismatch");
  }
  const double tol = tol_viol.value_or(default_violation_tolerance(sol, delta));
  return delta.a.dot(sol.x_star) > sol.lambda_star * delta.b.dot(sol.x_star) + tol;
}

using ConstraintSampler = std::function<SampledConstraint(Rng&)>;

/// Monte Carlo estimate of the violation probability from M fresh draws.
inline double estimate_violation_probability(const QlpSolution& sol, const ConstraintSampler& sampler,
                                             std::size_t samples, Rng& rng) {
  if (samples < 1) throw ParameterError("estimate_violation_probability: M must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    if (violates(sol, sampler(rng))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Essential sets

struct EssentialSet {
  std::vector<std::size_t> indices;
  double lambda = 0.0;
  double cost = 0.0;
};

struct EssentialSetOptions {
  /// Relative cost-match tolerance on lambda and on |x|^2.
  double tol = 1e-5;
  SolveOptions solve;
};

namespace detail {

inline bool within(double value, double reference, double tol) {
  return std::abs(value - reference) <= tol * std::max(1.0, std::abs(reference));
}

// Cost(sub) == Cost(full) within tol, where `ref` is the full solution.
// Dropping constraints can only lower the cost, so it suffices to check that
// the level of `sub` is not below ref.lambda by more than tol, and that at
// level ref.lambda its minimum-norm point is as far from the origin.
inline bool cost_matches(const QlpInstance& sub, const QlpSolution& ref, const EssentialSetOptions& opts) {
  const double below = ref.lambda_star - opts.tol * std::max(1.0, ref.lambda_star);
  if (below >= 0.0 && feasible_at(sub, below, opts.solve).feasible) return false;
  const FeasibilityProbe at_ref = feasible_at(sub, ref.lambda_star, opts.solve);
  if (!at_ref.feasible) return false;
  return within(at_ref.witness.squaredNorm(), ref.cost(), opts.tol);
}

inline EssentialSet describe(const QlpInstance& inst, std::vector<std::size_t> indices, const SolveOptions& opts) {
  const QlpSolution s = solve(inst.subset(indices), opts);
  return {std::move(indices), s.lambda_star, s.cost()};
}

}  // namespace detail

/// Smallest subset (ties: lexicographically smallest index list) whose
/// optimal cost equals that of the full instance. Limited to 20 constraints.
inline EssentialSet essential_set_exhaustive(const QlpInstance& inst, const EssentialSetOptions& opts = {}) {
  const std::size_t n = inst.size();
  if (n > 20) throw ParameterError("essential_set_exhaustive: at most 20 constraints supported");
  const QlpSolution full = solve(inst, opts.solve);
  for (std::size_t k = 0; k <= n; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
      if (detail::cost_matches(inst.subset(idx), full, opts)) return detail::describe(inst, idx, opts.solve);
      // Next k-combination in lexicographic order.
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  // Unreachable in exact arithmetic: the full set always matches itself.
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return {all, full.lambda_star, full.cost()};
}

/// Approximate essential set: drop constraints one at a time in index order,
/// keeping each removal that leaves the cost unchanged. No minimality
/// guarantee.
inline EssentialSet essential_set_greedy(const QlpInstance& inst, const EssentialSetOptions& opts = {}) {
  const QlpSolution full = solve(inst, opts.solve);
  std::vector<std::size_t> kept(inst.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    std::vector<std::size_t> trial;
    trial.reserve(kept.size());
    for (std::size_t j : kept) {
      if (j != i) trial.push_back(j);
    }
    if (detail::cost_matches(inst.subset(trial), full, opts)) kept = std::move(trial);
  }
  return detail::describe(inst, kept, opts.solve);
}

}  // namespace sjsr
