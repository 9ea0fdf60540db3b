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

template <typename Scalar>
struct PolyTerm {
  Exponent exponent;
  Scalar coefficient;
};

/// Polynomial vector field: one list of monomial terms per component.
template <typename Scalar>
using PolyVector = std::vector<std::vector<PolyTerm<Scalar>>>;

/// Converts Taylor coefficient matrices into a polynomial field. coeffs[j-1]
/// is n x C(n+j-1, j) with columns ordered as degree_monomials(n, j).
template <typename Scalar>
PolyVector<Scalar> poly_from_coefficients(int n, const std::vector<MatrixX<Scalar>>& coeffs,
                                          int first_degree = 1) {
  PolyVector<Scalar> field(n);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const int degree = first_degree + static_cast<int>(j);
    const std::vector<Exponent> monomials = degree_monomials(n, degree);
    const MatrixX<Scalar>& c = coeffs[j];
    detail::require(c.rows() == n, "coefficient matrix must have n rows");
    detail::require(c.cols() == static_cast<Eigen::Index>(monomials.size()),
                    "coefficient matrix of degree " + std::to_string(degree) + " has inconsistent column count");
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < c.cols(); ++col) {
        if (c(r, col) != Scalar(0)) field[r].push_back({monomials[col], c(r, col)});
      }
    }
  }
  return field;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> eval_poly(const PolyVector<Scalar>& field, const Eigen::MatrixBase<Derived>& x) {
  VectorX<Scalar> out = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(field.size()));
  for (std::size_t r = 0; r < field.size(); ++r) {
    for (const auto& term : field[r]) {
      Scalar value = term.coefficient;
      for (std::size_t s = 0; s < term.exponent.size(); ++s) {
        for (int p = 0; p < term.exponent[s]; ++p) value *= x(s);
      }
      out(r) += value;
    }
  }
  return out;
}

/// Lifted action of a polynomial field on the basis: d/dt monomial(alpha)
/// contributes alpha_r * x^(alpha - e_r) * field_r(x) for each r. Products
/// that land on a basis member go to `matrix`, constants (only possible on
/// degree-one rows) go to `constant`, everything else is dropped.
template <typename Scalar>
struct LiftedField {
  VectorX<Scalar> constant;
  MatrixX<Scalar> matrix;
};

template <typename Scalar>
LiftedField<Scalar> lift_field(const PolyVector<Scalar>& field, const MonomialBasis& basis) {
  const int n = basis.state_dim();
  const int dim = basis.size();
  detail::require(static_cast<int>(field.size()) == n, "lift_field: field has wrong dimension");
  LiftedField<Scalar> out{VectorX<Scalar>::Zero(dim), MatrixX<Scalar>::Zero(dim, dim)};
  Exponent target(n);
  for (int i = 0; i < dim; ++i) {
    const Exponent& alpha = basis.exponent(i);
    for (int r = 0; r < n; ++r) {
      if (alpha[r] == 0) continue;
      for (const auto& term : field[r]) {
        int degree = 0;
        for (int s = 0; s < n; ++s) {
          target[s] = alpha[s] - (s == r ? 1 : 0) + term.exponent[s];
          degree += target[s];
        }
        const Scalar weight = Scalar(alpha[r]) * term.coefficient;
        if (degree == 0) {
          out.constant(i) += weight;
        } else if (degree <= basis.order()) {
          const int j = basis.index_of(target);
          if (j >= 0) out.matrix(i, j) += weight;
        }
      }
    }
  }
  return out;
}

/// Truncated bilinear model d/dt psi = A psi + sum_i (B0_i + Bs_i psi) u_i.
template <typename Scalar>
struct CarlemanModel {
  MonomialBasis basis;
  MatrixX<Scalar> A;
  MatrixX<Scalar> B0;
  std::vector<MatrixX<Scalar>> input_state;

  int size() const { return basis.size(); }
  int inputs() const { return static_cast<int>(B0.cols()); }
  int state_dim() const { return basis.state_dim(); }
  /// Degree-one blocks of A and B0: the linearization at the origin.
  MatrixX<Scalar> linear_A() const { return A.topLeftCorner(state_dim(), state_dim()); }
  MatrixX<Scalar> linear_B() const { return B0.topRows(state_dim()); }
};

template <typename Scalar>
MatrixX<Scalar> build_transition_blocks(const std::vector<MatrixX<Scalar>>& taylor, const MonomialBasis& basis) {
  const PolyVector<Scalar> drift = poly_from_coefficients(basis.state_dim(), taylor, 1);
  return lift_field(drift, basis).matrix;
}

template <typename Scalar>
struct InputBlocks {
  MatrixX<Scalar> B0;
  std::vector<MatrixX<Scalar>> state;
};

/// input_const is n x k; input_state[i][l-1] is the degree-l coefficient
/// matrix (n x C(n+l-1, l)) of channel i.
template <typename Scalar>
InputBlocks<Scalar> build_input_blocks(const MatrixX<Scalar>& input_const,
                                       const std::vector<std::vector<MatrixX<Scalar>>>& input_state,
                                       const MonomialBasis& basis) {
  const int n = basis.state_dim();
  const int k = static_cast<int>(input_const.cols());
  detail::require(input_const.rows() == n, "build_input_blocks: B0 must have n rows");
  detail::require(input_state.empty() || static_cast<int>(input_state.size()) == k,
                  "build_input_blocks: need one coefficient list per input channel");
  InputBlocks<Scalar> out{MatrixX<Scalar>::Zero(basis.size(), k), {}};
  for (int i = 0; i < k; ++i) {
    PolyVector<Scalar> channel =
        input_state.empty() ? PolyVector<Scalar>(n) : poly_from_coefficients(n, input_state[i], 1);
    for (int r = 0; r < n; ++r) {
      if (input_const(r, i) != Scalar(0)) channel[r].push_back({Exponent(n, 0), input_const(r, i)});
    }
    LiftedField<Scalar> lifted = lift_field(channel, basis);
    out.B0.col(i) = lifted.constant;
    out.state.push_back(std::move(lifted.matrix));
  }
  return out;
}

template <typename Scalar>
CarlemanModel<Scalar> make_carleman_model(const MonomialBasis& basis, const std::vector<MatrixX<Scalar>>& taylor,
                                          const MatrixX<Scalar>& input_const,
                                          const std::vector<std::vector<MatrixX<Scalar>>>& input_state) {
  InputBlocks<Scalar> blocks = build_input_blocks(input_const, input_state, basis);
  return CarlemanModel<Scalar>{basis, build_transition_blocks(taylor, basis), std::move(blocks.B0),
                               std::move(blocks.state)};
}

/// B(psi): column i is B0_i + Bs_i psi.
template <typename Scalar, typename Derived>
MatrixX<Scalar> eval_input_matrix(const CarlemanModel<Scalar>& model, const Eigen::MatrixBase<Derived>& psi) {
  detail::require(psi.size() == model.size(), "eval_input_matrix: lifted vector does not conform to model");
  MatrixX<Scalar> B = model.B0;
  for (int i = 0; i < model.inputs(); ++i) B.col(i) += model.input_state[i] * psi;
  return B;
}

template <typename Scalar>
struct ClosedLoop {
  MatrixX<Scalar> gain_action;  // constant matrix with B(psi) K psi == gain_action psi (truncated)
  MatrixX<Scalar> A_cl;         // A - gain_action
};

template <typename Scalar>
ClosedLoop<Scalar> closed_loop_matrix(const CarlemanModel<Scalar>& model, const MatrixX<Scalar>& K) {
  const int dim = model.size();
  detail::require(K.rows() == model.inputs() && K.cols() == dim, "closed_loop_matrix: gain has wrong shape");
  MatrixX<Scalar> action = model.B0 * K;
  for (int i = 0; i < model.inputs(); ++i) {
    const MatrixX<Scalar>& Bs = model.input_state[i];
    for (int b = 0; b < dim; ++b) {
      for (int a = 0; a < dim; ++a) {
        const Scalar coefficient = Bs(a, b);
        if (coefficient == Scalar(0)) continue;
        for (int c = 0; c < dim; ++c) {
          const int p = model.basis.product_index(b, c);
          if (p >= 0) action(a, p) += coefficient * K(i, c);
        }
      }
    }
  }
  MatrixX<Scalar> A_cl = model.A - action;
  return {std::move(action), std::move(A_cl)};
}

}  // namespace carleman
