/*
 * Copyright 2026 The carleman-rl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "carleman/common.hpp"

namespace carleman {

template <typename Scalar>
bool is_hurwitz(const MatrixX<Scalar>& A, Scalar margin = Scalar(0)) {
  if (A.size() == 0) return true;
  if (!A.allFinite()) return false;
  Eigen::EigenSolver<MatrixX<Scalar>> es(A, false);
  if (es.info() != Eigen::Success) return false;
  return (es.eigenvalues().real().array() < -margin).all();
}

template <typename Scalar>
Scalar spectral_abscissa(const MatrixX<Scalar>& A) {
  Eigen::EigenSolver<MatrixX<Scalar>> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Solves A' P + P A + C = 0 by Bartels-Stewart on the complex Schur form
/// A = U T U*. The transformed equation T* Y + Y T = -U* C U is solved one
/// column at a time; T* is lower triangular.
template <typename Scalar>
MatrixX<Scalar> solve_lyapunov(const MatrixX<Scalar>& A, const MatrixX<Scalar>& C) {
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = A.rows();
  detail::require(A.cols() == n && C.rows() == n && C.cols() == n, "solve_lyapunov: shapes do not conform");
  if (n == 0) return MatrixX<Scalar>(0, 0);
  detail::require(A.allFinite() && C.allFinite(), "solve_lyapunov: non-finite input");

  Eigen::ComplexSchur<MatrixX<Scalar>> schur(A);
  detail::require(schur.info() == Eigen::Success, "solve_lyapunov: Schur decomposition failed");
  const CMatrix& T = schur.matrixT();
  const CMatrix& U = schur.matrixU();
  const CMatrix F = -(U.adjoint() * C.template cast<Complex>() * U);
  const CMatrix Th = T.adjoint();

  const Scalar scale = std::max(Scalar(1), T.cwiseAbs().maxCoeff());
  CMatrix Y = CMatrix::Zero(n, n);
  CMatrix system(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Matrix<Complex, Eigen::Dynamic, 1> rhs = F.col(j);
    if (j > 0) rhs -= Y.leftCols(j) * T.col(j).head(j);
    system = Th;
    system.diagonal().array() += T(j, j);
    const Scalar pivot = system.diagonal().cwiseAbs().minCoeff();
    if (!(pivot > std::numeric_limits<Scalar>::epsilon() * scale * Scalar(16))) {
      throw InvalidArgument("solve_lyapunov: A and -A' share an eigenvalue; no unique solution");
    }
    Y.col(j) = system.template triangularView<Eigen::Lower>().solve(rhs);
  }
  MatrixX<Scalar> P = (U * Y * U.adjoint()).real();
  return Scalar(0.5) * (P + P.transpose());
}

template <typename Scalar>
struct RiccatiSolution {
  MatrixX<Scalar> P;
  MatrixX<Scalar> K;
  int iterations = 0;
  std::vector<MatrixX<Scalar>> history;  // P after each Kleinman sweep
};

/// Kleinman's Newton iteration for A'P + PA - P B R^-1 B' P + Q = 0 from a
/// stabilizing K0.
template <typename Scalar>
RiccatiSolution<Scalar> kleinman(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& Q,
                                 const MatrixX<Scalar>& R, const MatrixX<Scalar>& K0, Scalar tol = Scalar(1e-13),
                                 int max_iters = 100) {
  detail::require(K0.rows() == B.cols() && K0.cols() == A.rows(), "kleinman: K0 has wrong shape");
  const MatrixX<Scalar> Rinv_Bt = R.ldlt().solve(B.transpose());
  RiccatiSolution<Scalar> out;
  MatrixX<Scalar> K = K0;
  for (int it = 0; it < max_iters; ++it) {
    const MatrixX<Scalar> Acl = A - B * K;
    if (!is_hurwitz(Acl)) throw InfeasibleError("kleinman: gain is not stabilizing at sweep " + std::to_string(it));
    MatrixX<Scalar> P = solve_lyapunov<Scalar>(Acl, Q + K.transpose() * R * K);
    out.history.push_back(P);
    out.iterations = it + 1;
    K = Rinv_Bt * P;
    const bool done = it > 0 && (P - out.P).norm() <= tol * std::max(Scalar(1), P.norm());
    out.P = std::move(P);
    if (done) break;
  }
  out.K = K;
  return out;
}

/// Stabilizing solution of the continuous algebraic Riccati equation via the
/// matrix sign function of the Hamiltonian, polished by Kleinman sweeps.
template <typename Scalar>
RiccatiSolution<Scalar> solve_care(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& Q,
                                   const MatrixX<Scalar>& R) {
  const Eigen::Index n = A.rows();
  detail::require(A.cols() == n && B.rows() == n && Q.rows() == n && Q.cols() == n, "solve_care: shapes");
  detail::require(R.rows() == B.cols() && R.cols() == B.cols(), "solve_care: R has wrong shape");
  const MatrixX<Scalar> G = B * R.ldlt().solve(B.transpose());

  MatrixX<Scalar> H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();
  MatrixX<Scalar> Z = H;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(Z);
    const Scalar det = std::abs(lu.determinant());
    if (!(det > Scalar(0)) || !std::isfinite(det)) break;
    const Scalar c = std::pow(det, Scalar(-1) / Scalar(2 * n));
    MatrixX<Scalar> next = Scalar(0.5) * (c * Z + lu.inverse() / c);
    const Scalar change = (next - Z).norm();
    Z = std::move(next);
    if (!Z.allFinite()) break;
    if (change <= Scalar(1e-12) * Z.norm()) {
      converged = true;
      break;
    }
  }
  if (!converged) throw InfeasibleError("solve_care: Hamiltonian has eigenvalues on the imaginary axis");

  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + I;
  rhs << Z.topLeftCorner(n, n) + I, Z.bottomLeftCorner(n, n);
  MatrixX<Scalar> P = lhs.colPivHouseholderQr().solve(-rhs);
  P = Scalar(0.5) * (P + P.transpose());
  MatrixX<Scalar> K0 = R.ldlt().solve(B.transpose() * P);
  if (!is_hurwitz<Scalar>(A - B * K0)) throw InfeasibleError("solve_care: pair (A, B) is not stabilizable");
  return kleinman<Scalar>(A, B, Q, R, K0);
}

}  // namespace carleman
