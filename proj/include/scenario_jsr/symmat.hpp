#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "scenario_jsr/errors.hpp"

namespace sjsr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real symmetric n x n matrix. Symmetry is exact: the stored array is
/// rebuilt from its upper triangle on construction.
class SymMatrix {
 public:
  /// Accepts a square matrix that is symmetric up to rounding
  /// (|m - m^T| <= 1e-10 * max(1, |m|_F)); throws otherwise. Non-finite
  /// entries are stored as given and rejected later by the numeric routines.
  explicit SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw DimensionError("SymMatrix: expected a non-empty square matrix");
    }
    if (m.allFinite()) {
      const double asym = (m - m.transpose()).norm();
      if (!(asym <= 1e-10 * std::max(1.0, m.norm()))) {
        throw ParameterError("SymMatrix: input is not symmetric");
      }
    }
    m_ = m.triangularView<Eigen::Upper>();
    m_.triangularView<Eigen::StrictlyLower>() = m_.transpose().eval();
  }

  static SymMatrix identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double frobenius_norm() const { return m_.norm(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Dimension n(n+1)/2 of the vectorized form of an n x n symmetric matrix.
constexpr std::size_t svec_dim(std::size_t n) noexcept { return n * (n + 1) / 2; }

/// Inverse of svec_dim; throws DimensionError when d is not triangular.
inline int svec_order(std::size_t d) {
  const auto n = static_cast<std::size_t>(
      std::llround((std::sqrt(8.0 * static_cast<double>(d) + 1.0) - 1.0) / 2.0));
  if (d == 0 || svec_dim(n) != d) {
    throw DimensionError("svec length " + std::to_string(d) + " is not a triangular number");
  }
  return static_cast<int>(n);
}

/// Symmetric matrix in isometric vectorized coordinates: row-major upper
/// triangle, diagonal entries unscaled, off-diagonal entries times sqrt(2).
/// The Euclidean inner product of two such vectors equals trace(M N).
class SymMatrixVec {
 public:
  explicit SymMatrixVec(Vector coords) : coords_(std::move(coords)) {
    order_ = svec_order(static_cast<std::size_t>(coords_.size()));
  }

  int order() const noexcept { return order_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(coords_.size()); }
  const Vector& coords() const noexcept { return coords_; }

 private:
  Vector coords_;
  int order_ = 0;
};

namespace detail {
inline constexpr double kSqrt2 = 1.41421356237309504880;
}  // namespace detail

/// Writes svec(m) for any square matrix whose upper triangle is meaningful.
template <class Derived>
void svec_into(const Eigen::MatrixBase<Derived>& m, Eigen::Ref<Vector> out) {
  const Eigen::Index n = m.rows();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(k++) = m(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) out(k++) = detail::kSqrt2 * m(i, j);
  }
}

/// Inverse of svec_into.
inline Matrix smat_raw(const Eigen::Ref<const Vector>& v) {
  const int n = svec_order(static_cast<std::size_t>(v.size()));
  Matrix m(n, n);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i) {
    m(i, i) = v(k++);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = v(k++) / detail::kSqrt2;
      m(j, i) = m(i, j);
    }
  }
  return m;
}

inline SymMatrixVec svec(const SymMatrix& m) {
  Vector v(static_cast<Eigen::Index>(svec_dim(static_cast<std::size_t>(m.dim()))));
  svec_into(m.matrix(), v);
  return SymMatrixVec(std::move(v));
}

inline SymMatrix smat(const SymMatrixVec& v) { return SymMatrix(smat_raw(v.coords())); }

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
struct EigDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

namespace detail {

inline EigDecomposition sym_eig_raw(const Matrix& m) {
  if (!m.allFinite()) throw NumericError("sym_eig: non-finite entries");
  // Tridiagonal QR; the rotation count is far below 100 n^2 for n <= 16.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Eigenvalue clipping at 1 of a symmetric (full) matrix.
inline Matrix proj_psd_shifted_raw(const Matrix& q) {
  const EigDecomposition e = sym_eig_raw(q);
  if (e.eigenvalues(0) >= 1.0) return q;
  const Vector clipped = e.eigenvalues.cwiseMax(1.0);
  Matrix p = e.eigenvectors * clipped.asDiagonal() * e.eigenvectors.transpose();
  p.triangularView<Eigen::StrictlyLower>() = p.transpose().eval();
  return p;
}

}  // namespace detail

inline EigDecomposition sym_eig(const SymMatrix& m) { return detail::sym_eig_raw(m.matrix()); }

/// Frobenius-nearest matrix with every eigenvalue >= 1:
/// I + (Q - I)_+, i.e. the eigenvalues of Q clipped from below at 1.
inline SymMatrix proj_psd_shifted(const SymMatrix& q) {
  return SymMatrix(detail::proj_psd_shifted_raw(q.matrix()));
}

/// Radial projection onto {P : |P|_F <= radius}.
inline SymMatrix proj_fro_ball(const SymMatrix& q, double radius) {
  if (!(radius > 0.0)) throw ParameterError("proj_fro_ball: radius must be positive");
  const double nrm = q.frobenius_norm();
  if (nrm <= radius) return q;
  return SymMatrix(q.matrix() * (radius / nrm));
}

inline double min_eig(const SymMatrix& m) { return sym_eig(m).eigenvalues(0); }

/// Product of the eigenvalues.
inline double det(const SymMatrix& m) { return sym_eig(m).eigenvalues.prod(); }

}  // namespace sjsr
