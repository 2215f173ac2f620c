#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/projection.hpp"
#include "scenario_jsr/symmat.hpp"

// Log-barrier path following for the level problems of the QLP solver.
//
// For a fixed level the feasible set is X ∩ {h_i^T x <= 0}. When every set in
// X comes with a descriptor, X has an explicit self-concordant barrier and
// three small convex programs answer everything the bisection needs:
//
//   phase 0: a strictly interior point of X (done once per instance),
//   phase 1: min s  s.t. x in X, h_i^T x / |h_i| <= s,
//   phase 2: min |x|^2  s.t. x in X, h_i^T x <= 0.
//
// Phase 1 stops as soon as s < 0 (a strictly feasible witness) or as soon as
// the duality gap proves s* > 0.

namespace sjsr::barrier {

/// X written as linear rows, Euclidean balls and shifted PSD cones.
struct SetModel {
  struct Sphere {
    Vector center;
    double r2 = 1.0;
  };

  int d = 0;
  Matrix rows;  // k x d: rows * x <= rhs
  Vector rhs;
  Vector row_norm;
  std::vector<Sphere> spheres;
  std::vector<int> cones;  // order n of each {svec(P) : P >= I}

  double nu() const {
    double v = static_cast<double>(rows.rows() + static_cast<Eigen::Index>(spheres.size()));
    for (int n : cones) v += n;
    return v;
  }
};

/// Barrier model of the intersection, or nullopt when some set only has a
/// projector or visibly has no interior (a flat box side, an empty half-space).
inline std::optional<SetModel> make_model(std::span<const ConvexSet> sets, int d) {
  SetModel m;
  m.d = d;
  std::vector<Vector> rows;
  std::vector<double> rhs;
  for (const ConvexSet& set : sets) {
    if (!set.descriptor()) return std::nullopt;
    bool ok = true;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) {
            m.spheres.push_back({s.center, s.radius * s.radius});
          } else if constexpr (std::is_same_v<T, FrobeniusBall>) {
            m.spheres.push_back({Vector::Zero(d), s.radius * s.radius});
          } else if constexpr (std::is_same_v<T, ShiftedPsdCone>) {
            m.cones.push_back(s.n);
          } else if constexpr (std::is_same_v<T, Box>) {
            for (Eigen::Index j = 0; j < s.lo.size(); ++j) {
              if (!(s.lo(j) < s.hi(j))) {
                ok = false;
                return;
              }
              if (std::isfinite(s.lo(j))) {
                rows.push_back(-Vector::Unit(d, j));
                rhs.push_back(-s.lo(j));
              }
              if (std::isfinite(s.hi(j))) {
                rows.push_back(Vector::Unit(d, j));
                rhs.push_back(s.hi(j));
              }
            }
          } else {
            if (s.normal.squaredNorm() == 0.0) {
              ok = s.offset >= 0.0;
              return;
            }
            rows.push_back(s.normal);
            rhs.push_back(s.offset);
          }
        },
        *set.descriptor());
    if (!ok) return std::nullopt;
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  m.rows.resize(k, d);
  m.rhs.resize(k);
  m.row_norm.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    m.rows.row(i) = rows[static_cast<std::size_t>(i)].transpose();
    m.rhs(i) = rhs[static_cast<std::size_t>(i)];
    m.row_norm(i) = m.rows.row(i).norm();
  }
  return m;
}

struct Options {
  /// Phase 1 stops undecided once the gap bound falls below gap_rel * (1 + |x|);
  /// phase 2 stops once it falls below gap_rel * (1 + |x|^2).
  double gap_rel = 1e-11;
  double mu = 10.0;
  int max_newton = 3000;
};

enum class Verdict { Feasible, Infeasible, Undecided };

struct LevelResult {
  Verdict verdict = Verdict::Undecided;
  Vector x;
  /// Final value of s: max_i h_i^T x / |h_i| up to the barrier slack.
  double slack = 0.0;
  int newton = 0;
};

namespace detail {

enum class Goal { MinSlack, MinNorm };

// Barrier problem over y = (x, s) or y = x. Linear part: b - A y > 0.
class Problem {
 public:
  Problem(const SetModel& model, Matrix a, Vector b, double relax, bool has_s, Goal goal)
      : model_(model), a_(std::move(a)), b_(std::move(b)), relax_(relax), has_s_(has_s), goal_(goal) {
    nu_ = static_cast<double>(a_.rows() + static_cast<Eigen::Index>(model_.spheres.size()));
    for (int n : model_.cones) nu_ += n;
  }

  double nu() const noexcept { return nu_; }
  Eigen::Index size() const noexcept { return a_.cols(); }

  // Returns false outside the barrier domain.
  bool eval(const Vector& y, double tau, bool derivs, double& f, Vector& g, Matrix& h) const {
    const int d = model_.d;
    const Eigen::Index p = size();
    const double s = has_s_ ? y(d) : 0.0;
    const auto x = y.head(d);

    const Vector slack = b_ - a_ * y;
    if (a_.rows() > 0 && !(slack.minCoeff() > 0.0)) return false;
    f = -slack.array().log().sum();
    if (derivs) {
      const Vector inv = slack.cwiseInverse();
      g = a_.transpose() * inv;
      const Matrix scaled = inv.asDiagonal() * a_;
      h.noalias() = scaled.transpose() * scaled;
    }

    for (const SetModel::Sphere& sp : model_.spheres) {
      const Vector diff = x - sp.center;
      const double fb = sp.r2 * (1.0 + relax_ * s) - diff.squaredNorm();
      if (!(fb > 0.0)) return false;
      f -= std::log(fb);
      if (derivs) {
        Vector grad = Vector::Zero(p);  // gradient of fb
        grad.head(d) = -2.0 * diff;
        if (has_s_) grad(d) = relax_ * sp.r2;
        g -= grad / fb;
        h += grad * grad.transpose() / (fb * fb);
        h.topLeftCorner(d, d).diagonal().array() += 2.0 / fb;
      }
    }

    if (!model_.cones.empty()) {
      const Matrix base = smat_raw(x);
      const auto n = base.rows();
      Matrix sm = base;
      sm.diagonal().array() -= 1.0 - relax_ * s;
      const Eigen::LLT<Matrix> llt(sm);
      if (llt.info() != Eigen::Success) return false;
      const Matrix& l = llt.matrixLLT();
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(l(i, i) > 0.0)) return false;
        logdet += 2.0 * std::log(l(i, i));
      }
      const double copies = static_cast<double>(model_.cones.size());
      f -= copies * logdet;
      if (derivs) {
        const Matrix w = llt.solve(Matrix::Identity(n, n));
        Vector sw(d);
        svec_into(w, sw);
        g.head(d) -= copies * sw;
        if (has_s_) g(d) -= copies * relax_ * w.trace();
        add_cone_hessian(w, copies, h);
        if (has_s_) {
          const Matrix ww = w * w;
          Vector sww(d);
          svec_into(ww, sww);
          h.col(d).head(d) += copies * relax_ * sww;
          h.row(d).head(d) += copies * relax_ * sww.transpose();
          h(d, d) += copies * relax_ * relax_ * ww.trace();
        }
      }
    }

    if (goal_ == Goal::MinSlack) {
      f += tau * s;
      if (derivs) g(d) += tau;
    } else {
      f += tau * x.squaredNorm();
      if (derivs) {
        g.head(d) += 2.0 * tau * x;
        h.topLeftCorner(d, d).diagonal().array() += 2.0 * tau;
      }
    }
    return true;
  }

  bool in_domain(const Vector& y) const {
    double f = 0.0;
    Vector g;
    Matrix h;
    return eval(y, 0.0, false, f, g, h) && std::isfinite(f);
  }

 private:
  // Hessian of -log det smat(x) - I: column k is svec(W E_k W).
  void add_cone_hessian(const Matrix& w, double copies, Matrix& h) const {
    const auto n = w.rows();
    std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) idx.emplace_back(i, j);
    }
    const auto d = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto [i, j] = idx[static_cast<std::size_t>(k)];
      for (Eigen::Index l = 0; l <= k; ++l) {
        const auto [p, q] = idx[static_cast<std::size_t>(l)];
        double v;
        if (i == j) {
          v = w(p, i) * w(q, i);
        } else {
          v = (w(p, i) * w(q, j) + w(p, j) * w(q, i)) / ::sjsr::detail::kSqrt2;
        }
        if (p != q) v *= ::sjsr::detail::kSqrt2;
        h(l, k) += copies * v;
        if (l != k) h(k, l) += copies * v;
      }
    }
  }

  const SetModel& model_;
  Matrix a_;
  Vector b_;
  double relax_;
  bool has_s_;
  Goal goal_;
  double nu_ = 0.0;
};

// Damped Newton on the self-concordant centering objective. `stop(y)` runs
// after every step; returning true ends centering early.
template <class Stop>
bool center(const Problem& prob, Vector& y, double tau, int& budget, Stop&& stop) {
  double f = 0.0;
  Vector g;
  Matrix h;
  for (int local = 0; local < 200 && budget > 0; ++local) {
    --budget;
    if (!prob.eval(y, tau, true, f, g, h)) throw NumericError("barrier: iterate left the domain");
    Vector dy;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
      dy = -llt.solve(g);
    } else {
      const double ridge = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      dy = -(h + ridge * Matrix::Identity(h.rows(), h.cols())).ldlt().solve(g);
    }
    const double dec2 = -g.dot(dy);
    if (!std::isfinite(dec2) || dec2 <= 1e-10) return false;
    const double dec = std::sqrt(dec2);
    double step = dec > 0.25 ? 1.0 / (1.0 + dec) : 1.0;
    Vector trial = y + step * dy;
    int halvings = 0;
    while (!prob.in_domain(trial)) {
      if (++halvings > 60) return false;
      step *= 0.5;
      trial = y + step * dy;
    }
    y = std::move(trial);
    if (stop(y)) return true;
  }
  return false;
}

inline Matrix normalized_rows(const Matrix& h, Vector& norms) {
  norms = h.rowwise().norm();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if (norms(i) > 0.0) keep.push_back(i);
  }
  Matrix out(static_cast<Eigen::Index>(keep.size()), h.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto i = keep[r];
    out.row(static_cast<Eigen::Index>(r)) = h.row(i) / norms(i);
  }
  return out;
}

// Rows of the model's linear part, with `s_coef` times the row norm in the
// s column when has_s.
inline void append_model_rows(const SetModel& m, double s_coef, bool has_s, Matrix& a, Vector& b,
                              Eigen::Index& at) {
  const int d = m.d;
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i, ++at) {
    a.row(at).head(d) = m.rows.row(i);
    if (has_s) a(at, d) = -s_coef * m.row_norm(i);
    b(at) = m.rhs(i);
  }
}

}  // namespace detail

/// A point with every barrier term finite, i.e. in the interior of X, found by
/// minimizing a uniform relaxation s of all constraints. nullopt when the
/// relaxation cannot be pushed below zero (X has empty interior).
inline std::optional<Vector> interior_point(const SetModel& m, const Vector& start, const Options& opts = {}) {
  const int d = m.d;
  const Eigen::Index k = m.rows.rows();
  Matrix a = Matrix::Zero(k + 1, d + 1);
  Vector b(k + 1);
  Eigen::Index at = 0;
  detail::append_model_rows(m, 1.0, true, a, b, at);
  a(at, d) = -1.0;  // s >= -1
  b(at) = 1.0;
  const detail::Problem prob(m, std::move(a), std::move(b), 1.0, true, detail::Goal::MinSlack);

  double worst = -0.5;
  for (Eigen::Index i = 0; i < k; ++i) {
    worst = std::max(worst, (m.rows.row(i).dot(start) - m.rhs(i)) / m.row_norm(i));
  }
  for (const SetModel::Sphere& sp : m.spheres) {
    worst = std::max(worst, ((start - sp.center).squaredNorm() - sp.r2) / sp.r2);
  }
  if (!m.cones.empty()) worst = std::max(worst, 1.0 - ::sjsr::detail::sym_eig_raw(smat_raw(start)).eigenvalues(0));
  Vector y(d + 1);
  y.head(d) = start;
  y(d) = worst + 1.0;
  if (!prob.in_domain(y)) return std::nullopt;

  int budget = opts.max_newton;
  double tau = 1.0;
  auto never = [](const Vector&) { return false; };
  for (;;) {
    detail::center(prob, y, tau, budget, never);
    if (y(d) < -0.25 || budget <= 0 || prob.nu() / tau < 1e-9) break;
    tau *= opts.mu;
  }
  if (!(y(d) < -1e-9)) return std::nullopt;
  return Vector(y.head(d));
}

/// Phase 1 at one level. `h` holds the constraint normals as rows (N x d);
/// zero rows are vacuous. `interior` must lie in the interior of X.
inline LevelResult level_feasibility(const SetModel& m, const Vector& interior, const Matrix& h,
                                     const Options& opts = {}) {
  const int d = m.d;
  LevelResult out;
  Vector norms;
  const Matrix hn = detail::normalized_rows(h, norms);
  const Eigen::Index nh = hn.rows();
  if (nh == 0 || (hn * interior).maxCoeff() < 0.0) {
    out.verdict = Verdict::Feasible;
    out.x = interior;
    out.slack = nh == 0 ? 0.0 : (hn * interior).maxCoeff();
    return out;
  }

  const Eigen::Index k = m.rows.rows();
  Matrix a = Matrix::Zero(k + nh + 1, d + 1);
  Vector b = Vector::Zero(k + nh + 1);
  Eigen::Index at = 0;
  detail::append_model_rows(m, 0.0, true, a, b, at);
  a.block(at, 0, nh, d) = hn;
  a.block(at, d, nh, 1).setConstant(-1.0);
  at += nh;
  a(at, d) = -1.0;  // s >= -1
  b(at) = 1.0;
  const detail::Problem prob(m, std::move(a), std::move(b), 0.0, true, detail::Goal::MinSlack);

  Vector y(d + 1);
  y.head(d) = interior;
  y(d) = std::max((hn * interior).maxCoeff(), -0.5) + 1.0;

  auto strictly_feasible = [&](const Vector& v) {
    return v(d) < 0.0 && (hn * v.head(d)).maxCoeff() < 0.0;
  };
  int budget = opts.max_newton;
  double tau = prob.nu() / (1.0 + std::abs(y(d)));
  for (;;) {
    const bool hit = detail::center(prob, y, tau, budget, strictly_feasible);
    out.x = y.head(d);
    out.slack = y(d);
    if (hit || strictly_feasible(y)) {
      out.verdict = Verdict::Feasible;
      break;
    }
    const double gap = 1.5 * prob.nu() / tau;
    if (y(d) - gap > 0.0) {
      out.verdict = Verdict::Infeasible;
      break;
    }
    if (gap <= opts.gap_rel * (1.0 + out.x.norm()) || budget <= 0) {
      out.verdict = Verdict::Undecided;
      break;
    }
    tau *= opts.mu;
  }
  out.newton = opts.max_newton - budget;
  return out;
}

/// Phase 2: minimum-norm point of X ∩ {h x <= 0}, started from a strictly
/// feasible point.
inline Vector min_norm_point(const SetModel& m, const Vector& strict, const Matrix& h, const Options& opts = {}) {
  const int d = m.d;
  Vector norms;
  const Matrix hn = detail::normalized_rows(h, norms);
  const Eigen::Index nh = hn.rows();
  const Eigen::Index k = m.rows.rows();
  Matrix a = Matrix::Zero(k + nh, d);
  Vector b = Vector::Zero(k + nh);
  Eigen::Index at = 0;
  detail::append_model_rows(m, 0.0, false, a, b, at);
  a.block(at, 0, nh, d) = hn;
  const detail::Problem prob(m, std::move(a), std::move(b), 0.0, false, detail::Goal::MinNorm);

  Vector y = strict;
  if (!prob.in_domain(y)) throw PreconditionError("min_norm_point: start is not strictly feasible");
  int budget = opts.max_newton;
  double tau = prob.nu() / (1.0 + y.squaredNorm());
  auto never = [](const Vector&) { return false; };
  for (;;) {
    detail::center(prob, y, tau, budget, never);
    if (prob.nu() / tau <= opts.gap_rel * (1.0 + y.squaredNorm()) || budget <= 0) break;
    tau *= opts.mu;
  }
  return y;
}

}  // namespace sjsr::barrier
