#pragma once

// Dense Riccati and covariance numerics shared by every other module.
// Functions take any Eigen expression and return plain dense matrices of the
// same scalar type.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wncs/error.hpp"

namespace wncs {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace internal {

inline std::string shape(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " must be square and non-empty, got " +
                    shape(m.rows(), m.cols()),
                name);
  }
}

template <typename Derived>
void require_shape(const Eigen::MatrixBase<Derived>& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " must be " + shape(rows, cols) + ", got " +
                    shape(m.rows(), m.cols()),
                name);
  }
}

}  // namespace internal

/// (X + X^T) / 2.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& x) {
  return (x + x.transpose()) / typename Derived::Scalar(2);
}

/// Time update of the error covariance: A X A^T + W.
template <typename DA, typename DW, typename DX>
DenseMatrix<typename DX::Scalar> h_map(const Eigen::MatrixBase<DA>& A,
                                       const Eigen::MatrixBase<DW>& W,
                                       const Eigen::MatrixBase<DX>& X) {
  internal::require_square(A, "A");
  internal::require_shape(W, A.rows(), A.rows(), "W");
  internal::require_shape(X, A.rows(), A.rows(), "X");
  return symmetrize(A * X * A.transpose() + W);
}

/// Measurement update: X - X C^T (C X C^T + V)^{-1} C X.
template <typename DC, typename DV, typename DX>
DenseMatrix<typename DX::Scalar> g_map(const Eigen::MatrixBase<DC>& C,
                                       const Eigen::MatrixBase<DV>& V,
                                       const Eigen::MatrixBase<DX>& X) {
  using Scalar = typename DX::Scalar;
  internal::require_square(X, "X");
  internal::require_shape(C, C.rows(), X.rows(), "C");
  internal::require_shape(V, C.rows(), C.rows(), "V");
  const DenseMatrix<Scalar> S = C * X * C.transpose() + V;
  const Eigen::LDLT<DenseMatrix<Scalar>> ldlt(symmetrize(S));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= Scalar(0)).any()) {
    throw Error(ErrorCode::kSingularMatrix, "innovation covariance C X C^T + V is not positive definite",
                "V");
  }
  const DenseMatrix<Scalar> CX = C * X;
  return symmetrize(X - CX.transpose() * ldlt.solve(CX));
}

/// h applied `t` times.
template <typename DA, typename DW, typename DX>
DenseMatrix<typename DX::Scalar> h_power(const Eigen::MatrixBase<DA>& A,
                                         const Eigen::MatrixBase<DW>& W,
                                         const Eigen::MatrixBase<DX>& X, int t) {
  DenseMatrix<typename DX::Scalar> P = X;
  for (int k = 0; k < t; ++k) P = h_map(A, W, P);
  return P;
}

/// Largest |eigenvalue|.
template <typename Derived>
typename Derived::RealScalar spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  internal::require_square(A, "A");
  using Scalar = typename Derived::Scalar;
  const Eigen::EigenSolver<DenseMatrix<Scalar>> es(A.eval(), /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value.
template <typename Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived>& A) {
  internal::require_square(A, "A");
  using Scalar = typename Derived::Scalar;
  const Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(A.eval());
  return svd.singularValues()(0);
}

/// Numerical rank by SVD, singular values above `tol * max(1, sigma_1)`.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& M, double tol = 1e-8) {
  using Scalar = typename Derived::Scalar;
  if (M.size() == 0) return 0;
  const Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(M.eval());
  const auto& s = svd.singularValues();
  const double cutoff = tol * std::max(1.0, static_cast<double>(s(0)));
  return static_cast<Eigen::Index>((s.array() > cutoff).count());
}

/// Rank test on [B, AB, ..., A^{n-1}B].
template <typename DA, typename DB>
bool is_controllable(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B,
                     double tol = 1e-8) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = A.rows();
  DenseMatrix<Scalar> ctrb(n, n * B.cols());
  DenseMatrix<Scalar> block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = block;
    block = A * block;
  }
  return numerical_rank(ctrb, tol) == n;
}

template <typename DA, typename DC>
bool is_observable(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DC>& C,
                   double tol = 1e-8) {
  return is_controllable(A.transpose(), C.transpose(), tol);
}

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues
/// from round-off are clamped to zero.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(symmetrize(X));
  const auto d = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Smallest eigenvalue of the symmetric part.
template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(symmetrize(X),
                                                                Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct RiccatiOptions {
  double change_tol = 1e-12;
  int max_iterations = 100000;
  /// Extra sweeps after the change criterion is met, to settle round-off.
  int polish_iterations = 50;
};

/// Result of the filter fixed-point iteration.
template <typename Scalar>
struct FilterRiccatiSolution {
  DenseMatrix<Scalar> P;
  Scalar residual;
  int iterations;
};

/// Unique PSD fixed point of g o h, by iterating from X0 = W.
///
/// The change tolerance is absolute but never tighter than a few ulps of
/// ||P||_F; a fixed point of order 10^3 cannot move by less than that.
template <typename DA, typename DC, typename DW, typename DV>
FilterRiccatiSolution<typename DA::Scalar> steady_state_error_cov(
    const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DC>& C,
    const Eigen::MatrixBase<DW>& W, const Eigen::MatrixBase<DV>& V,
    const RiccatiOptions& opts = {}) {
  using Scalar = typename DA::Scalar;
  internal::require_square(A, "A");
  internal::require_shape(W, A.rows(), A.rows(), "W");
  internal::require_shape(C, C.rows(), A.rows(), "C");
  internal::require_shape(V, C.rows(), C.rows(), "V");

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  DenseMatrix<Scalar> X = symmetrize(W);
  int it = 0;
  int polish = -1;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    DenseMatrix<Scalar> next = g_map(C, V, h_map(A, W, X));
    const Scalar change = (next - X).norm();
    X = std::move(next);
    if (!std::isfinite(static_cast<double>(change))) break;
    if (polish < 0 && change <= std::max<Scalar>(opts.change_tol, 8 * eps * X.norm())) {
      polish = opts.polish_iterations;
    }
    if (polish >= 0 && polish-- == 0) {
      converged = true;
      break;
    }
  }
  const Scalar residual = (g_map(C, V, h_map(A, W, X)) - X).norm();
  if (!converged || !std::isfinite(static_cast<double>(residual))) {
    std::ostringstream os;
    os << "filter Riccati iteration did not converge in " << opts.max_iterations
       << " iterations (residual " << residual << ")";
    throw Error(ErrorCode::kNotConverged, os.str());
  }
  return {X, residual, it};
}

/// Steady-state LQR quantities.
template <typename Scalar>
struct DareSolution {
  DenseMatrix<Scalar> Pi;     ///< Stabilizing DARE solution.
  DenseMatrix<Scalar> L;      ///< u = L x, L = -(B^T Pi B + R)^{-1} B^T Pi A.
  DenseMatrix<Scalar> Gamma;  ///< L^T (B^T Pi B + R) L.
  Scalar residual;
  Scalar closed_loop_radius;
  int iterations;
};

template <typename DPi, typename DA, typename DB, typename DQ, typename DR>
typename DPi::Scalar dare_residual(const Eigen::MatrixBase<DPi>& Pi,
                                   const Eigen::MatrixBase<DA>& A,
                                   const Eigen::MatrixBase<DB>& B,
                                   const Eigen::MatrixBase<DQ>& Q,
                                   const Eigen::MatrixBase<DR>& R) {
  using Scalar = typename DPi::Scalar;
  const DenseMatrix<Scalar> S = B.transpose() * Pi * B + R;
  const DenseMatrix<Scalar> BtPA = B.transpose() * Pi * A;
  const DenseMatrix<Scalar> rhs =
      A.transpose() * Pi * A + Q - BtPA.transpose() * S.ldlt().solve(BtPA);
  return (rhs - Pi).norm();
}

/// Solves Pi = A^T Pi A + Q - A^T Pi B (B^T Pi B + R)^{-1} B^T Pi A by
/// fixed-point iteration from Pi = Q.
template <typename DA, typename DB, typename DQ, typename DR>
DareSolution<typename DA::Scalar> solve_dare(const Eigen::MatrixBase<DA>& A,
                                             const Eigen::MatrixBase<DB>& B,
                                             const Eigen::MatrixBase<DQ>& Q,
                                             const Eigen::MatrixBase<DR>& R,
                                             const RiccatiOptions& opts = {}) {
  using Scalar = typename DA::Scalar;
  internal::require_square(A, "A");
  const Eigen::Index n = A.rows();
  internal::require_shape(B, n, B.cols(), "B");
  internal::require_shape(Q, n, n, "Q");
  internal::require_shape(R, B.cols(), B.cols(), "R");

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  DenseMatrix<Scalar> Pi = symmetrize(Q);
  int it = 0;
  int polish = -1;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    const DenseMatrix<Scalar> S = symmetrize(B.transpose() * Pi * B + R);
    const Eigen::LDLT<DenseMatrix<Scalar>> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::kSingularMatrix, "B^T Pi B + R is not positive definite", "R");
    }
    const DenseMatrix<Scalar> BtPA = B.transpose() * Pi * A;
    DenseMatrix<Scalar> next =
        symmetrize(A.transpose() * Pi * A + Q - BtPA.transpose() * ldlt.solve(BtPA));
    const Scalar change = (next - Pi).norm();
    Pi = std::move(next);
    if (!std::isfinite(static_cast<double>(change))) break;
    if (polish < 0 && change <= std::max<Scalar>(opts.change_tol, 8 * eps * Pi.norm())) {
      polish = opts.polish_iterations;
    }
    if (polish >= 0 && polish-- == 0) {
      converged = true;
      break;
    }
  }
  if (!converged || !Pi.allFinite()) {
    std::ostringstream os;
    os << "DARE iteration did not converge in " << opts.max_iterations << " iterations";
    throw Error(ErrorCode::kNotConverged, os.str());
  }

  const DenseMatrix<Scalar> S = symmetrize(B.transpose() * Pi * B + R);
  DenseMatrix<Scalar> L = -S.ldlt().solve(B.transpose() * Pi * A);
  DenseMatrix<Scalar> Gamma = symmetrize(L.transpose() * S * L);
  const Scalar radius = spectral_radius(A + B * L);
  if (!(radius < Scalar(1))) {
    std::ostringstream os;
    os << "closed loop A + BL is not stable (spectral radius " << radius << ")";
    throw Error(ErrorCode::kUnstabilizable, os.str(), "B");
  }
  const Scalar residual = dare_residual(Pi, A, B, Q, R);
  return {std::move(Pi), std::move(L), std::move(Gamma), residual, radius, it};
}

}  // namespace wncs
