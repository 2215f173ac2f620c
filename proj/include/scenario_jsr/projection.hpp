#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/symmat.hpp"

namespace sjsr {

/// Euclidean ball {x : |x - center| <= radius}.
struct Ball {
  Vector center;
  double radius = 1.0;
};

/// Axis-aligned box {x : lo <= x <= hi}.
struct Box {
  Vector lo;
  Vector hi;
};

/// {svec(P) : P >= I} for n x n symmetric P.
struct ShiftedPsdCone {
  int n = 1;
};

/// {svec(P) : |P|_F <= radius}, i.e. the origin-centred Euclidean ball in
/// svec coordinates.
struct FrobeniusBall {
  double radius = 1.0;
};

/// {x : normal^T x <= offset}.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

using SetDescriptor = std::variant<Ball, Box, ShiftedPsdCone, FrobeniusBall, Halfspace>;

/// Closed convex set known through its exact Euclidean projector.
///
/// Named sets carry a descriptor (used for serialization); arbitrary sets may
/// be supplied as a bare projector callable.
class ConvexSet {
 public:
  using Projector = std::function<Vector(const Vector&)>;

  ConvexSet(SetDescriptor desc) : descriptor_(std::move(desc)) {  // NOLINT(google-explicit-constructor)
    std::visit([this](const auto& s) { validate(s); }, *descriptor_);
  }

  ConvexSet(std::string name, Projector projector)
      : name_(std::move(name)), projector_(std::move(projector)) {
    if (!projector_) throw ParameterError("ConvexSet: empty projector");
  }

  Vector project(const Vector& x) const {
    if (projector_) return projector_(x);
    return std::visit([&x](const auto& s) { return project_onto(s, x); }, *descriptor_);
  }

  double distance(const Vector& x) const { return (x - project(x)).norm(); }

  const std::optional<SetDescriptor>& descriptor() const noexcept { return descriptor_; }

  std::string name() const {
    if (!descriptor_) return name_;
    return std::visit([](const auto& s) { return kind_name(s); }, *descriptor_);
  }

  /// Ambient dimension, when the descriptor fixes it.
  std::optional<int> dim() const {
    if (!descriptor_) return std::nullopt;
    return std::visit(
        [](const auto& s) -> std::optional<int> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) return static_cast<int>(s.center.size());
          else if constexpr (std::is_same_v<T, Box>) return static_cast<int>(s.lo.size());
          else if constexpr (std::is_same_v<T, ShiftedPsdCone>) return static_cast<int>(svec_dim(s.n));
          else if constexpr (std::is_same_v<T, Halfspace>) return static_cast<int>(s.normal.size());
          else return std::nullopt;
        },
        *descriptor_);
  }

  bool is_halfspace() const noexcept {
    return descriptor_ && std::holds_alternative<Halfspace>(*descriptor_);
  }

 private:
  static void validate(const Ball& s) {
    if (!(s.radius > 0.0)) throw ParameterError("ball: radius must be positive");
  }
  static void validate(const Box& s) {
    if (s.lo.size() != s.hi.size()) throw DimensionError("box: lo/hi length mismatch");
    if (!(s.lo.array() <= s.hi.array()).all()) throw ParameterError("box: lo must not exceed hi");
  }
  static void validate(const ShiftedPsdCone& s) {
    if (s.n < 1) throw ParameterError("psd_shifted: n must be positive");
  }
  static void validate(const FrobeniusBall& s) {
    if (!(s.radius > 0.0)) throw ParameterError("fro_ball: radius must be positive");
  }
  static void validate(const Halfspace&) {}

  static Vector project_onto(const Ball& s, const Vector& x) {
    const Vector diff = x - s.center;
    const double nrm = diff.norm();
    if (nrm <= s.radius) return x;
    return s.center + diff * (s.radius / nrm);
  }
  static Vector project_onto(const Box& s, const Vector& x) {
    return x.cwiseMax(s.lo).cwiseMin(s.hi);
  }
  static Vector project_onto(const ShiftedPsdCone& s, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != svec_dim(static_cast<std::size_t>(s.n))) {
      throw DimensionError("psd_shifted: vector length does not match n(n+1)/2");
    }
    Vector out(x.size());
    svec_into(detail::proj_psd_shifted_raw(smat_raw(x)), out);
    return out;
  }
  static Vector project_onto(const FrobeniusBall& s, const Vector& x) {
    const double nrm = x.norm();
    if (nrm <= s.radius) return x;
    return x * (s.radius / nrm);
  }
  static Vector project_onto(const Halfspace& s, const Vector& x) {
    const double nn = s.normal.squaredNorm();
    const double v = s.normal.dot(x) - s.offset;
    if (v <= 0.0) return x;
    if (nn == 0.0) {
      // 0^T x <= offset < 0 is empty; there is no projection.
      return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return x - (v / nn) * s.normal;
  }

  static std::string kind_name(const Ball&) { return "ball"; }
  static std::string kind_name(const Box&) { return "box"; }
  static std::string kind_name(const ShiftedPsdCone&) { return "psd_shifted"; }
  static std::string kind_name(const FrobeniusBall&) { return "fro_ball"; }
  static std::string kind_name(const Halfspace&) { return "halfspace"; }

  std::optional<SetDescriptor> descriptor_;
  std::string name_;
  Projector projector_;
};

/// A batch of half-spaces {x : normals.col(i)^T x <= offsets(i)} stored
/// column-wise, handled by Dykstra with scalar correction terms.
struct HalfspaceBlock {
  Matrix normals;  // d x k
  Vector offsets;  // k
  Vector sq_norms;  // k

  HalfspaceBlock() = default;
  HalfspaceBlock(Matrix n, Vector o) : normals(std::move(n)), offsets(std::move(o)) {
    if (offsets.size() != normals.cols()) throw DimensionError("HalfspaceBlock: size mismatch");
    sq_norms = normals.colwise().squaredNorm().transpose();
  }

  Eigen::Index size() const noexcept { return normals.cols(); }

  /// True when some member is {0^T x <= c} with c < 0.
  bool has_empty_member() const {
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (sq_norms(i) == 0.0 && offsets(i) < 0.0) return true;
    }
    return false;
  }

  double max_distance(const Vector& x) const {
    if (size() == 0) return 0.0;
    const Vector v = normals.transpose() * x - offsets;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (v(i) > 0.0 && sq_norms(i) > 0.0) worst = std::max(worst, v(i) / std::sqrt(sq_norms(i)));
    }
    return worst;
  }
};

struct ProjectionOptions {
  /// Target for the max distance to any set, relative to 1 + |x|.
  double tol = 1e-8;
  int max_iter = 20000;
  /// Stop once the residual trend shows the target cannot be met within the
  /// remaining cycle budget (disjoint or nearly tangent sets).
  bool early_exit = true;
};

struct ProjectionResult {
  Vector point;
  /// max_k dist(point, S_k), absolute.
  double residual = 0.0;
  int cycles = 0;
  bool converged = false;

  double scale() const { return 1.0 + point.norm(); }
  double relative_residual() const { return residual / scale(); }
};

namespace detail {

inline double max_set_distance(const Vector& x, std::span<const ConvexSet* const> sets) {
  double worst = 0.0;
  for (const ConvexSet* s : sets) worst = std::max(worst, s->distance(x));
  return worst;
}

}  // namespace detail

/// Projection of x0 onto (intersection of sets) ∩ (half-spaces of block) by
/// Dykstra's cyclic algorithm with correction terms.
///
/// Converged when the max distance to every set and the last cycle's
/// displacement are both <= tol * (1 + |x|). Otherwise the iterate with the
/// smallest relative residual seen is returned and `converged` is false.
inline ProjectionResult project_intersection(const Vector& x0, std::span<const ConvexSet> sets,
                                             const HalfspaceBlock& block,
                                             const ProjectionOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw ParameterError("project_intersection: tol must be positive");
  if (opts.max_iter < 1) throw ParameterError("project_intersection: max_iter must be positive");
  if (sets.empty() && block.size() == 0) {
    throw ParameterError("project_intersection: at least one set is required");
  }
  const Eigen::Index d = x0.size();
  if (block.size() > 0 && block.normals.rows() != d) {
    throw DimensionError("project_intersection: half-space dimension mismatch");
  }
  if (block.has_empty_member()) {
    return {x0, std::numeric_limits<double>::infinity(), 0, false};
  }

  // Named half-spaces go through the scalar-correction path as well.
  std::vector<const ConvexSet*> generic;
  std::vector<const Halfspace*> extra_halfspaces;
  for (const ConvexSet& s : sets) {
    if (s.is_halfspace()) {
      extra_halfspaces.push_back(&std::get<Halfspace>(*s.descriptor()));
    } else {
      generic.push_back(&s);
    }
  }
  HalfspaceBlock merged;
  const HalfspaceBlock* hs = &block;
  if (!extra_halfspaces.empty()) {
    const Eigen::Index k0 = block.size();
    Matrix normals(d, k0 + static_cast<Eigen::Index>(extra_halfspaces.size()));
    Vector offsets(normals.cols());
    if (k0 > 0) {
      normals.leftCols(k0) = block.normals;
      offsets.head(k0) = block.offsets;
    }
    for (std::size_t i = 0; i < extra_halfspaces.size(); ++i) {
      const Halfspace& h = *extra_halfspaces[i];
      if (h.normal.size() != d) throw DimensionError("project_intersection: half-space dimension mismatch");
      normals.col(k0 + static_cast<Eigen::Index>(i)) = h.normal;
      offsets(k0 + static_cast<Eigen::Index>(i)) = h.offset;
    }
    merged = HalfspaceBlock(std::move(normals), std::move(offsets));
    hs = &merged;
    if (merged.has_empty_member()) return {x0, std::numeric_limits<double>::infinity(), 0, false};
  }

  std::vector<Vector> corr(generic.size(), Vector::Zero(d));
  Vector t = Vector::Zero(hs->size());
  Vector x = x0;
  Vector prev(d);
  Vector y(d);

  ProjectionResult best{x0, std::numeric_limits<double>::infinity(), 0, false};
  double best_rel = std::numeric_limits<double>::infinity();

  constexpr int kWindow = 50;
  constexpr int kWarmup = 200;
  double window_best = std::numeric_limits<double>::infinity();
  double prev_window_best = std::numeric_limits<double>::infinity();
  int stalls = 0;

  int cycle = 0;
  for (cycle = 1; cycle <= opts.max_iter; ++cycle) {
    prev = x;
    for (std::size_t k = 0; k < generic.size(); ++k) {
      y = x + corr[k];
      x = generic[k]->project(y);
      corr[k] = y - x;
    }
    for (Eigen::Index i = 0; i < hs->size(); ++i) {
      const double nn = hs->sq_norms(i);
      if (nn == 0.0) continue;
      const double v = hs->normals.col(i).dot(x) + t(i) * nn - hs->offsets(i);
      const double tn = v > 0.0 ? v / nn : 0.0;
      if (tn != t(i)) {
        x.noalias() += (t(i) - tn) * hs->normals.col(i);
        t(i) = tn;
      }
    }

    const double residual = std::max(detail::max_set_distance(x, generic), hs->max_distance(x));
    const double scale = 1.0 + x.norm();
    const double rel = residual / scale;
    if (!std::isfinite(rel)) break;
    if (rel < best_rel) {
      best_rel = rel;
      best = {x, residual, cycle, false};
    }
    if (rel <= opts.tol && (x - prev).norm() <= opts.tol * scale) {
      return {x, residual, cycle, true};
    }

    window_best = std::min(window_best, rel);
    if (opts.early_exit && cycle % kWindow == 0) {
      if (cycle >= kWarmup && std::isfinite(prev_window_best) && window_best > opts.tol) {
        const double ratio = window_best / prev_window_best;
        if (ratio >= 1.0) {
          if (++stalls >= 3) break;
        } else {
          stalls = 0;
          const double needed = kWindow * std::log(opts.tol / window_best) / std::log(ratio);
          if (needed > 4.0 * static_cast<double>(opts.max_iter - cycle)) break;
        }
      }
      prev_window_best = window_best;
      window_best = std::numeric_limits<double>::infinity();
    }
  }
  best.cycles = std::min(cycle, opts.max_iter);
  return best;
}

inline ProjectionResult project_intersection(const Vector& x0, std::span<const ConvexSet> sets,
                                             const ProjectionOptions& opts = {}) {
  return project_intersection(x0, sets, HalfspaceBlock{}, opts);
}

/// Convenience overload matching the (x0, sets, tol, max_iter) call shape.
inline ProjectionResult project_intersection(const Vector& x0, std::span<const ConvexSet> sets,
                                             double tol, int max_iter) {
  ProjectionOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return project_intersection(x0, sets, HalfspaceBlock{}, opts);
}

}  // namespace sjsr
