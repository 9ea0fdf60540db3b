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

#include <map>
#include <vector>

#include "carleman/common.hpp"

namespace carleman {

/// Multi-index of non-negative exponents, one entry per state coordinate.
using Exponent = std::vector<int>;

int exponent_degree(const Exponent& e);

/// Graded ordering: lower total degree first, then lexicographically larger
/// exponent first, so (2,0) < (1,1) < (0,2).
bool graded_less(const Exponent& a, const Exponent& b);

/// All monomials of exactly `degree` in `n` variables, in graded order.
std::vector<Exponent> degree_monomials(int n, int degree);

/// Ordered set of monomials of total degree 1..order over n states.
///
/// Every basis contains all n degree-one monomials. Higher-degree entries are
/// either complete (all C(n+k-1, k) monomials of each degree k) or a chosen
/// subset; products that fall outside the set are what truncation drops.
class MonomialBasis {
 public:
  MonomialBasis(int n, int order, std::vector<Exponent> exponents);

  int state_dim() const noexcept { return n_; }
  int order() const noexcept { return order_; }
  int size() const noexcept { return static_cast<int>(exponents_.size()); }
  bool is_complete() const noexcept { return complete_; }

  const std::vector<Exponent>& exponents() const noexcept { return exponents_; }
  const Exponent& exponent(int i) const { return exponents_.at(i); }
  int degree(int i) const { return degrees_.at(i); }

  /// Start index of the degree-d block, for d in 1..order+1 (order+1 gives
  /// size()).
  int degree_offset(int d) const { return degree_offsets_.at(d - 1); }
  int block_size(int d) const { return degree_offset(d + 1) - degree_offset(d); }

  /// Index of `e` in the basis or -1 when it is not a member.
  int index_of(const Exponent& e) const;

  /// Index of monomial(a) * monomial(b), or -1 if the product is not a member.
  int product_index(int a, int b) const { return products_(a, b); }

  /// Evaluates every basis monomial at x.
  template <typename Derived>
  VectorX<typename Derived::Scalar> lift(const Eigen::MatrixBase<Derived>& x) const;

  bool operator==(const MonomialBasis& other) const {
    return n_ == other.n_ && order_ == other.order_ && exponents_ == other.exponents_;
  }

 private:
  int n_;
  int order_;
  bool complete_ = false;
  std::vector<Exponent> exponents_;
  std::vector<int> degrees_;
  std::vector<int> degree_offsets_;
  bool has_linear_block() const;

  std::map<Exponent, int> index_;
  Eigen::MatrixXi products_;
};

/// Complete graded basis of all monomials with degree 1..order.
MonomialBasis monomial_basis(int n, int order);

/// Degree-one monomials plus the listed higher-degree monomials (degree
/// 2..order). Duplicates are rejected.
MonomialBasis restricted_basis(int n, int order, const std::vector<Exponent>& higher);

template <typename Derived>
VectorX<typename Derived::Scalar> MonomialBasis::lift(const Eigen::MatrixBase<Derived>& x) const {
  using Scalar = typename Derived::Scalar;
  detail::require(x.size() == n_, "lift_state: state has wrong dimension");
  VectorX<Scalar> psi(size());
  for (int i = 0; i < size(); ++i) {
    Scalar value(1);
    const Exponent& e = exponents_[i];
    for (int r = 0; r < n_; ++r) {
      for (int p = 0; p < e[r]; ++p) value *= x(r);
    }
    psi(i) = value;
  }
  return psi;
}

template <typename Derived>
VectorX<typename Derived::Scalar> lift_state(const Eigen::MatrixBase<Derived>& x,
                                             const MonomialBasis& basis) {
  return basis.lift(x);
}

}  // namespace carleman
