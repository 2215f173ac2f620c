#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/rng.hpp"
#include "scenario_jsr/symmat.hpp"

namespace sjsr {

/// Discrete-time switched linear system x+ = A_sigma x over a finite set of
/// n x n modes.
class SwitchedSystem {
 public:
  explicit SwitchedSystem(std::vector<Matrix> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw ParameterError("SwitchedSystem: at least one mode is required");
    const Eigen::Index n = modes_.front().rows();
    if (n < 1) throw ParameterError("SwitchedSystem: modes must be non-empty");
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (modes_[i].rows() != n || modes_[i].cols() != n) {
        throw DimensionError("SwitchedSystem: mode " + std::to_string(i) + " is not " + std::to_string(n) +
                             "x" + std::to_string(n));
      }
    }
  }

  int n() const noexcept { return static_cast<int>(modes_.front().rows()); }
  std::size_t m() const noexcept { return modes_.size(); }
  const std::vector<Matrix>& modes() const noexcept { return modes_; }
  const Matrix& mode(std::size_t i) const { return modes_.at(i); }

 private:
  std::vector<Matrix> modes_;
};

/// One-step observation y = A_sigma x with x on the unit sphere; sigma is not
/// part of the record.
struct Observation {
  Vector x;
  Vector y;
};

/// Observations of a common state dimension n (the sampled constraint set).
struct SampleSet {
  int n = 1;
  std::vector<Observation> observations;

  std::size_t size() const noexcept { return observations.size(); }
};

/// Uniform point on the unit sphere of R^n: a normalized standard Gaussian
/// vector, redrawn when its norm is below 1e-8.
inline Vector sample_uniform_sphere(int n, Rng& rng) {
  if (n < 1) throw ParameterError("sample_uniform_sphere: n must be positive");
  Vector v(n);
  for (;;) {
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    const double nrm = v.norm();
    if (nrm >= 1e-8) return v / nrm;
  }
}

namespace whitebox {

struct LabelledObservation {
  Observation observation;
  std::size_t mode;
};

/// Observation together with the hidden mode index. Validation code only.
inline LabelledObservation observe_with_mode(const SwitchedSystem& sys, Rng& rng) {
  Vector x = sample_uniform_sphere(sys.n(), rng);
  const auto sigma = static_cast<std::size_t>(rng.uniform_index(sys.m()));
  Vector y = sys.mode(sigma) * x;
  return {{std::move(x), std::move(y)}, sigma};
}

}  // namespace whitebox

/// Black-box query: x uniform on the sphere, mode uniform over the m modes.
inline Observation observe(const SwitchedSystem& sys, Rng& rng) {
  return whitebox::observe_with_mode(sys, rng).observation;
}

inline SampleSet observe_many(const SwitchedSystem& sys, std::size_t count, Rng& rng) {
  SampleSet out;
  out.n = sys.n();
  out.observations.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.observations.push_back(observe(sys, rng));
  return out;
}

// ---------------------------------------------------------------------------
// Barabanov classification

struct BarabanovWitness {
  double gamma = 0.0;
  /// P > 0 with A^T P A = gamma^2 P, scaled so that lambda_min(P) = 1.
  SymMatrix P = SymMatrix::identity(1);
  /// |A^T P A - gamma^2 P|_F / |P|_F.
  double residual = 0.0;
};

struct BarabanovResult {
  bool flag = false;
  std::optional<BarabanovWitness> witness;
  /// (max modulus - min modulus) / max modulus.
  double modulus_spread = 0.0;
  /// The modulus test landed within a factor 10 of the threshold.
  bool near_threshold = false;
};

namespace detail {

struct EigenCluster {
  std::complex<double> center;
  int multiplicity;
};

inline std::vector<EigenCluster> cluster_eigenvalues(const Eigen::VectorXcd& ev, double radius) {
  std::vector<std::complex<double>> vals(ev.data(), ev.data() + ev.size());
  std::vector<bool> used(vals.size(), false);
  std::vector<EigenCluster> clusters;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (used[i]) continue;
    std::complex<double> sum = vals[i];
    int count = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      if (!used[j] && std::abs(vals[j] - vals[i]) <= radius) {
        used[j] = true;
        sum += vals[j];
        ++count;
      }
    }
    clusters.push_back({sum / static_cast<double>(count), count});
  }
  return clusters;
}

}  // namespace detail

/// Whether A^T P A = gamma^2 P has a solution P > 0, gamma >= 0.
///
/// Equivalent to: A is diagonalizable over C and all eigenvalue moduli are
/// equal. Moduli are compared relative to the largest one (threshold `tol`).
/// Diagonalizability is decided per eigenvalue cluster by comparing the
/// numerical nullity of A - mu I with the cluster size. On success the real
/// block-diagonalizing basis V (A V = V D with 1x1 and 2x2 rotation-scaling
/// blocks) gives the witness P = V^-T V^-1.
inline BarabanovResult is_barabanov(const Matrix& A, double tol = 1e-8) {
  if (A.rows() != A.cols() || A.rows() < 1) throw DimensionError("is_barabanov: expected a square matrix");
  if (!A.allFinite()) throw NumericError("is_barabanov: non-finite entries");
  const Eigen::Index n = A.rows();
  const double a_norm = A.norm();
  BarabanovResult out;
  if (a_norm == 0.0) {
    out.flag = true;
    out.witness = BarabanovWitness{0.0, SymMatrix::identity(static_cast<int>(n)), 0.0};
    return out;
  }

  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericError("is_barabanov: eigensolver failed");
  const Eigen::VectorXcd ev = es.eigenvalues();
  const Eigen::VectorXd moduli = ev.cwiseAbs();
  const double max_mod = moduli.maxCoeff();
  const double min_mod = moduli.minCoeff();
  out.modulus_spread = max_mod > 0.0 ? (max_mod - min_mod) / max_mod : 0.0;
  out.near_threshold = out.modulus_spread >= tol / 10.0 && out.modulus_spread <= tol * 10.0;
  if (out.modulus_spread > tol) return out;

  const double cluster_radius = 1e-6 * a_norm;
  const double null_tol = 1e-7 * a_norm;
  std::vector<Vector> columns;
  for (const auto& c : detail::cluster_eigenvalues(ev, cluster_radius)) {
    const bool real_cluster = std::abs(c.center.imag()) <= cluster_radius;
    if (!real_cluster && c.center.imag() < 0.0) continue;  // handled with its conjugate
    if (real_cluster) {
      const double mu = c.center.real();
      const Matrix shifted = A - mu * Matrix::Identity(n, n);
      Eigen::JacobiSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
      const Vector& sv = svd.singularValues();
      for (int k = 0; k < c.multiplicity; ++k) {
        if (sv(n - 1 - k) > null_tol) return out;  // defective
      }
      for (int k = 0; k < c.multiplicity; ++k) {
        columns.push_back(svd.matrixV().col(n - 1 - k));
      }
    } else {
      const Eigen::MatrixXcd shifted = A.cast<std::complex<double>>() - c.center * Eigen::MatrixXcd::Identity(n, n);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
      const Eigen::VectorXd& sv = svd.singularValues();
      for (int k = 0; k < c.multiplicity; ++k) {
        if (sv(n - 1 - k) > null_tol) return out;
      }
      for (int k = 0; k < c.multiplicity; ++k) {
        const Eigen::VectorXcd v = svd.matrixV().col(n - 1 - k);
        columns.push_back(v.real());
        columns.push_back(v.imag());
      }
    }
  }
  if (static_cast<Eigen::Index>(columns.size()) != n) return out;

  Matrix V(n, n);
  for (Eigen::Index j = 0; j < n; ++j) V.col(j) = columns[static_cast<std::size_t>(j)];
  Eigen::JacobiSVD<Matrix> vsvd(V);
  const Vector& vs = vsvd.singularValues();
  if (!(vs(n - 1) > 1e-10 * vs(0))) return out;  // eigenvector basis too ill-conditioned

  const Matrix T = V.inverse();
  Matrix P = T.transpose() * T;
  P = 0.5 * (P + P.transpose()).eval();
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(P, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (lmin > 0.0) P /= lmin;
  const double gamma = moduli.mean();
  const double residual = (A.transpose() * P * A - gamma * gamma * P).norm() / P.norm();
  out.flag = true;
  out.witness = BarabanovWitness{gamma, SymMatrix(P), residual};
  return out;
}

/// Throws BarabanovError naming the first offending mode.
inline void assert_no_barabanov(const SwitchedSystem& sys, double tol = 1e-8) {
  for (std::size_t i = 0; i < sys.m(); ++i) {
    const BarabanovResult r = is_barabanov(sys.mode(i), tol);
    if (r.flag) {
      throw BarabanovError("mode " + std::to_string(i) +
                               " is Barabanov (diagonalizable with all eigenvalue moduli equal to " +
                               std::to_string(r.witness ? r.witness->gamma : 0.0) + ")",
                           i);
    }
  }
}

// ---------------------------------------------------------------------------
// White-box JSR bracket

struct JsrBracket {
  double lower = 0.0;
  double upper = 0.0;
  int depth = 0;
};

inline double spectral_radius(const Matrix& M) {
  if (M.rows() == 1) return std::abs(M(0, 0));
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success) throw NumericError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double spectral_norm(const Matrix& M) {
  if (M.rows() == 1) return std::abs(M(0, 0));
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}

/// Classical product bounds on the joint spectral radius from all products
/// of length k <= K:
///   lower = max_k max_Pi rho(Pi)^(1/k),   upper = min_k (max_Pi |Pi|_2)^(1/k).
/// Requires m^K <= 1e6.
inline JsrBracket jsr_bruteforce_bounds(const SwitchedSystem& sys, int K) {
  if (K < 1) throw ParameterError("jsr_bruteforce_bounds: K must be >= 1");
  const double count = std::pow(static_cast<double>(sys.m()), K);
  if (count > 1e6) throw ParameterError("jsr_bruteforce_bounds: m^K exceeds 1e6");

  std::vector<double> max_rho(static_cast<std::size_t>(K) + 1, 0.0);
  std::vector<double> max_norm(static_cast<std::size_t>(K) + 1, 0.0);
  std::vector<Matrix> stack(static_cast<std::size_t>(K) + 1);
  stack[0] = Matrix::Identity(sys.n(), sys.n());

  // Depth-first over products A_{i_k} ... A_{i_1}.
  auto visit = [&](auto&& self, int level) -> void {
    for (std::size_t i = 0; i < sys.m(); ++i) {
      const auto lv = static_cast<std::size_t>(level);
      stack[lv] = sys.mode(i) * stack[lv - 1];
      max_rho[lv] = std::max(max_rho[lv], spectral_radius(stack[lv]));
      max_norm[lv] = std::max(max_norm[lv], spectral_norm(stack[lv]));
      if (level < K) self(self, level + 1);
    }
  };
  visit(visit, 1);

  JsrBracket out;
  out.depth = K;
  out.upper = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= K; ++k) {
    const double inv_k = 1.0 / k;
    out.lower = std::max(out.lower, std::pow(max_rho[static_cast<std::size_t>(k)], inv_k));
    out.upper = std::min(out.upper, std::pow(max_norm[static_cast<std::size_t>(k)], inv_k));
  }
  return out;
}

}  // namespace sjsr
