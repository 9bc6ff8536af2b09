#pragma once

// Dense linear algebra for discrete-time LQR: Riccati solving, gains,
// Gramians and Kronecker-structured system construction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "mmrl/errors.hpp"

namespace mmrl {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatX<double>;
using Vector = VecX<double>;

template <typename Scalar>
struct DareSolution {
  MatX<Scalar> P;  // d_x x d_x cost-to-go
  MatX<Scalar> K;  // d_u x d_x gain, u = -K x
  int iterations = 0;
  Scalar residual = Scalar(0);
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

template <typename Scalar>
MatX<Scalar> riccati_map(const MatX<Scalar>& A, const MatX<Scalar>& B,
                         const MatX<Scalar>& Q, const MatX<Scalar>& R,
                         const MatX<Scalar>& P) {
  const MatX<Scalar> PB = P * B;
  const MatX<Scalar> S = R + B.transpose() * PB;
  const MatX<Scalar> gain_core = S.ldlt().solve(PB.transpose());  // S^-1 B'P
  MatX<Scalar> next = Q + A.transpose() * (P - PB * gain_core) * A;
  return (next + next.transpose()) * Scalar(0.5);
}

}  // namespace detail

// K = (R + B'PB)^-1 B'PA
template <typename Scalar>
MatX<Scalar> lqr_gain(const MatX<Scalar>& A, const MatX<Scalar>& B,
                      const MatX<Scalar>& R, const MatX<Scalar>& P) {
  const MatX<Scalar> BtP = B.transpose() * P;
  return (R + BtP * B).ldlt().solve(BtP * A);
}

// Max-abs entry of P - Ric(P).
template <typename Scalar>
Scalar dare_residual(const MatX<Scalar>& A, const MatX<Scalar>& B,
                     const MatX<Scalar>& Q, const MatX<Scalar>& R,
                     const MatX<Scalar>& P) {
  return (P - detail::riccati_map(A, B, Q, R, P)).cwiseAbs().maxCoeff();
}

// Fixed-point Riccati iteration P <- Q + A'(P - PB(R+B'PB)^-1 B'P)A from
// P = Q. Returns the first iterate whose residual is within tol.
template <typename Scalar>
DareSolution<Scalar> dare_solve(const MatX<Scalar>& A, const MatX<Scalar>& B,
                                const MatX<Scalar>& Q, const MatX<Scalar>& R,
                                Scalar tol = Scalar(1e-10),
                                int max_iter = 100000) {
  const auto n = A.rows();
  const auto m = B.cols();
  detail::require(A.cols() == n, "dare_solve: A must be square");
  detail::require(B.rows() == n, "dare_solve: B rows must match A");
  detail::require(Q.rows() == n && Q.cols() == n, "dare_solve: Q must be d_x x d_x");
  detail::require(R.rows() == m && R.cols() == m, "dare_solve: R must be d_u x d_u");

  MatX<Scalar> P = Q;
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  for (int it = 0; it <= max_iter; ++it) {
    MatX<Scalar> next = detail::riccati_map(A, B, Q, R, P);
    residual = (P - next).cwiseAbs().maxCoeff();
    if (!std::isfinite(static_cast<double>(residual))) break;
    if (residual <= tol) {
      DareSolution<Scalar> sol;
      sol.K = lqr_gain(A, B, R, P);
      sol.P = std::move(P);
      sol.iterations = it;
      sol.residual = residual;
      return sol;
    }
    P = std::move(next);
  }
  throw NonConvergence("dare_solve: residual " + std::to_string(static_cast<double>(residual)) +
                       " above tolerance after " + std::to_string(max_iter) + " iterations");
}

// W = sum_{j<k} (Acl^j)' B B' Acl^j
template <typename DerivedA, typename DerivedB>
MatX<typename DerivedA::Scalar> controllability_gramian(const Eigen::MatrixBase<DerivedA>& Acl,
                                                        const Eigen::MatrixBase<DerivedB>& B,
                                                        int k) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(Acl.rows() == Acl.cols(), "controllability_gramian: Acl must be square");
  detail::require(B.rows() == Acl.rows(), "controllability_gramian: B rows must match Acl");
  detail::require(k >= 1, "controllability_gramian: k must be >= 1");
  const auto n = Acl.rows();
  const MatX<Scalar> BBt = B * B.transpose();
  MatX<Scalar> W = MatX<Scalar>::Zero(n, n);
  MatX<Scalar> power = MatX<Scalar>::Identity(n, n);
  for (int j = 0; j < k; ++j) {
    W.noalias() += power.transpose() * BBt * power;
    power = (power * Acl).eval();
  }
  return (W + W.transpose()) * Scalar(0.5);
}

template <typename DerivedA, typename DerivedB>
MatX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& A,
                                     const Eigen::MatrixBase<DerivedB>& B) {
  using Scalar = typename DerivedA::Scalar;
  MatX<Scalar> out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

template <typename Derived>
typename Derived::Scalar min_singular_value(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  const MatX<Scalar> dense = M;
  Eigen::JacobiSVD<MatX<Scalar>> svd(dense);
  const auto& s = svd.singularValues();  // min(rows, cols) values
  return s.size() == 0 ? Scalar(0) : std::max(Scalar(0), s.minCoeff());
}

template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  detail::require(M.rows() == M.cols(), "spectral_radius: matrix must be square");
  Eigen::EigenSolver<MatX<Scalar>> es(MatX<Scalar>(M), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Derived1, typename Derived2>
typename Derived1::Scalar frobenius_sq_diff(const Eigen::MatrixBase<Derived1>& M1,
                                            const Eigen::MatrixBase<Derived2>& M2) {
  detail::require(M1.rows() == M2.rows() && M1.cols() == M2.cols(),
                  "frobenius_sq_diff: shapes differ");
  return (M1 - M2).squaredNorm();
}

}  // namespace mmrl
