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

#include <vector>

#include "carleman/monomial_basis.hpp"

namespace carleman {

/// Bookkeeping for quadratic forms over a lifted basis.
///
/// The extended basis lists every distinct product monomial(a) * monomial(b)
/// of two base entries (for a complete basis: all monomials of degree
/// 2..2N). A symmetric P over the base basis is identified by its
/// coefficient vector over the extended basis; the inverse map spreads each
/// coefficient equally over the ordered index pairs that produce it.
class QuadBasis {
 public:
  explicit QuadBasis(MonomialBasis base);

  const MonomialBasis& base() const noexcept { return base_; }
  int size() const noexcept { return static_cast<int>(extended_.size()); }
  const std::vector<Exponent>& extended() const noexcept { return extended_; }

  /// Extended index of monomial(a) * monomial(b).
  int pair_index(int a, int b) const { return pairs_(a, b); }
  /// Number of ordered pairs (a, b) that map to extended entry e.
  int pair_count(int e) const { return counts_.at(e); }
  /// Weight 1 / pair_count(pair_index(a, b)) used when un-vectorizing.
  double pair_weight(int a, int b) const { return 1.0 / counts_[pairs_(a, b)]; }
  /// One ordered pair that produces extended entry e.
  std::pair<int, int> representative(int e) const { return representatives_.at(e); }

 private:
  MonomialBasis base_;
  std::vector<Exponent> extended_;
  Eigen::MatrixXi pairs_;
  std::vector<int> counts_;
  std::vector<std::pair<int, int>> representatives_;
};

/// Extended monomial vector built from a lifted vector psi.
template <typename Derived>
VectorX<typename Derived::Scalar> extended_lift(const Eigen::MatrixBase<Derived>& psi,
                                                const QuadBasis& qb) {
  detail::require(psi.size() == qb.base().size(), "extended_lift: lifted vector has wrong size");
  VectorX<typename Derived::Scalar> out(qb.size());
  for (int e = 0; e < qb.size(); ++e) {
    const auto [a, b] = qb.representative(e);
    out(e) = psi(a) * psi(b);
  }
  return out;
}

/// Coefficients p with psi' P psi == p' extended_lift(psi) for every psi on
/// the lift of a state.
template <typename Derived>
VectorX<typename Derived::Scalar> vectorize_quadratic(const Eigen::MatrixBase<Derived>& P,
                                                      const QuadBasis& qb) {
  using Scalar = typename Derived::Scalar;
  const int dim = qb.base().size();
  detail::require(P.rows() == dim && P.cols() == dim, "vectorize_quadratic: P does not conform to basis");
  const Scalar scale = std::max(Scalar(1), P.cwiseAbs().maxCoeff());
  detail::require((P - P.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-10) * scale,
                  "vectorize_quadratic: P is not symmetric");
  VectorX<Scalar> p = VectorX<Scalar>::Zero(qb.size());
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) p(qb.pair_index(a, b)) += P(a, b);
  }
  return p;
}

/// Symmetric P whose vectorization is p, with each coefficient split equally
/// among its index pairs.
template <typename Derived>
MatrixX<typename Derived::Scalar> unvectorize_quadratic(const Eigen::MatrixBase<Derived>& p,
                                                        const QuadBasis& qb) {
  using Scalar = typename Derived::Scalar;
  detail::require(p.size() == qb.size(), "unvectorize_quadratic: coefficient vector has wrong size");
  const int dim = qb.base().size();
  MatrixX<Scalar> P(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) P(a, b) = p(qb.pair_index(a, b)) * Scalar(qb.pair_weight(a, b));
  }
  return P;
}

/// Canonical representative of the quadratic form psi' P psi.
template <typename Derived>
MatrixX<typename Derived::Scalar> canonical_quadratic(const Eigen::MatrixBase<Derived>& P,
                                                      const QuadBasis& qb) {
  return unvectorize_quadratic(vectorize_quadratic(P, qb), qb);
}

/// Returns beta(psi) * v, where beta(psi) is the extended-by-base matrix
/// satisfying p' beta(psi) = psi' P for the canonical P of p.
template <typename DerivedPsi, typename DerivedV>
VectorX<typename DerivedPsi::Scalar> beta_apply(const Eigen::MatrixBase<DerivedPsi>& psi,
                                                const Eigen::MatrixBase<DerivedV>& v,
                                                const QuadBasis& qb) {
  using Scalar = typename DerivedPsi::Scalar;
  const int dim = qb.base().size();
  detail::require(psi.size() == dim && v.size() == dim, "beta: vectors do not conform to basis");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(qb.size());
  for (int b = 0; b < dim; ++b) {
    if (v(b) == Scalar(0)) continue;
    for (int a = 0; a < dim; ++a) {
      out(qb.pair_index(a, b)) += psi(a) * v(b) * Scalar(qb.pair_weight(a, b));
    }
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> beta_matrix(const Eigen::MatrixBase<Derived>& psi, const QuadBasis& qb) {
  using Scalar = typename Derived::Scalar;
  const int dim = qb.base().size();
  detail::require(psi.size() == dim, "beta: lifted vector does not conform to basis");
  MatrixX<Scalar> beta = MatrixX<Scalar>::Zero(qb.size(), dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) beta(qb.pair_index(a, b), b) += psi(a) * Scalar(qb.pair_weight(a, b));
  }
  return beta;
}

}  // namespace carleman
