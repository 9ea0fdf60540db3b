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

#include <gtest/gtest.h>

#include "carleman/carleman_model.hpp"
#include "carleman/plant.hpp"
#include "carleman/quad_basis.hpp"
#include "oracles.hpp"

namespace carleman {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

TEST(MonomialBasis, TwoStatesOrderTwo) {
  const MonomialBasis b = monomial_basis(2, 2);
  const std::vector<Exponent> expected = {{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(b.exponents(), expected);
  EXPECT_EQ(b.size(), 5);
  EXPECT_EQ(b.degree_offset(2), 2);
  EXPECT_TRUE(b.is_complete());
}

TEST(MonomialBasis, SmallCases) {
  const MonomialBasis scalar = monomial_basis(1, 3);
  EXPECT_EQ(scalar.exponents(), (std::vector<Exponent>{{1}, {2}, {3}}));
  EXPECT_EQ(monomial_basis(3, 2).size(), 9);
}

TEST(MonomialBasis, RejectsZeroSizes) {
  EXPECT_THROW(monomial_basis(0, 2), InvalidArgument);
  EXPECT_THROW(monomial_basis(2, 0), InvalidArgument);
}

TEST(MonomialBasis, BlockSizesAreBinomial) {
  for (int n = 1; n <= 4; ++n) {
    for (int N = 1; N <= 4; ++N) {
      const MonomialBasis b = monomial_basis(n, N);
      long total = 0;
      for (int k = 1; k <= N; ++k) {
        EXPECT_EQ(b.block_size(k), binomial(n + k - 1, k)) << n << " " << N << " " << k;
        total += binomial(n + k - 1, k);
        for (int i = b.degree_offset(k); i < b.degree_offset(k + 1); ++i) EXPECT_EQ(b.degree(i), k);
      }
      EXPECT_EQ(b.size(), total);
      for (int i = 0; i + 1 < b.size(); ++i) EXPECT_TRUE(graded_less(b.exponent(i), b.exponent(i + 1)));
    }
  }
}

TEST(MonomialBasis, RestrictedBasisKeepsLinearBlock) {
  const MonomialBasis b = restricted_basis(3, 2, {{0, 1, 1}, {2, 0, 0}});
  EXPECT_EQ(b.size(), 5);
  EXPECT_EQ(b.exponent(3), (Exponent{2, 0, 0}));
  EXPECT_FALSE(b.is_complete());
  EXPECT_EQ(b.index_of({1, 1, 0}), -1);
  EXPECT_THROW(restricted_basis(2, 2, {{1, 1}, {1, 1}}), InvalidArgument);
  EXPECT_THROW(restricted_basis(2, 2, {{3, 0}}), InvalidArgument);
}

TEST(LiftState, Examples) {
  VectorXd x(2);
  x << 2, 3;
  VectorXd expected(5);
  expected << 2, 3, 4, 6, 9;
  EXPECT_EQ(lift_state(x, monomial_basis(2, 2)), expected);
  EXPECT_TRUE(lift_state(VectorXd::Zero(2), monomial_basis(2, 3)).isZero(0.0));
  EXPECT_EQ(lift_state(VectorXd::Ones(1), monomial_basis(1, 3)), VectorXd::Ones(3));
  EXPECT_THROW(lift_state(VectorXd::Ones(3), monomial_basis(2, 2)), InvalidArgument);
}

TEST(TransitionBlocks, ScalarExamples) {
  const double a = -0.7, b = 1.3;
  const MonomialBasis basis = monomial_basis(1, 2);
  MatrixXd expected(2, 2);
  expected << a, 0, 0, 2 * a;
  EXPECT_EQ(build_transition_blocks<double>({MatrixXd::Constant(1, 1, a)}, basis), expected);
  expected << a, b, 0, 2 * a;
  EXPECT_EQ(build_transition_blocks<double>({MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, b)}, basis),
            expected);
}

TEST(TransitionBlocks, IdentityScalesDegreeTwoBlock) {
  const MonomialBasis basis = monomial_basis(2, 2);
  const MatrixXd A = build_transition_blocks<double>({MatrixXd::Identity(2, 2)}, basis);
  EXPECT_EQ(A.bottomRightCorner(3, 3), 2.0 * MatrixXd::Identity(3, 3));
}

TEST(TransitionBlocks, RejectsInconsistentColumns) {
  EXPECT_THROW(build_transition_blocks<double>({MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)}, monomial_basis(2, 2)),
               InvalidArgument);
}

TEST(TransitionBlocks, MatchesKroneckerOracleAndIsTriangular) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.integer(1, 3);
    const int N = rng.integer(1, 3);
    std::vector<MatrixXd> taylor;
    const int degrees = rng.integer(1, 3);
    for (int j = 1; j <= degrees; ++j) {
      taylor.push_back(rng.matrix(n, static_cast<Eigen::Index>(degree_monomials(n, j).size())));
    }
    const MonomialBasis basis = monomial_basis(n, N);
    const MatrixXd A = build_transition_blocks<double>(taylor, basis);
    const MatrixXd ref = oracle::kronecker_transition(taylor, n, N);
    EXPECT_LE((A - ref).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    for (int r = 0; r < basis.size(); ++r) {
      for (int c = 0; c < basis.size(); ++c) {
        if (basis.degree(c) < basis.degree(r)) EXPECT_EQ(A(r, c), 0.0);
      }
    }
  }
}

TEST(InputBlocks, ConstantInputHasNoStateDependence) {
  MatrixXd b1(2, 1);
  b1 << 0.5, -1.0;
  const CarlemanModel<double> model =
      make_carleman_model<double>(monomial_basis(2, 1), {MatrixXd::Zero(2, 2)}, b1, {});
  EXPECT_EQ(model.B0, b1);
  oracle::Rng rng(2);
  EXPECT_EQ(eval_input_matrix(model, rng.vector(2)), b1);
}

TEST(InputBlocks, OscillatorColumn) {
  const PolynomialPlant plant = oscillator_plant();
  const CarlemanModel<double> model = carleman_model(plant, monomial_basis(2, 2));
  VectorXd b0(5);
  b0 << 0, 1, 0, 0, 0;
  EXPECT_EQ(VectorXd(model.B0.col(0)), b0);
  VectorXd x(2);
  x << 0.8, 0.7;
  VectorXd expected(5);
  expected << 0, 1.8, 0, 1.44, 2.52;
  EXPECT_LE((eval_input_matrix(model, lift_state(x, model.basis)).col(0) - expected).norm(), 1e-14);
  EXPECT_EQ(eval_input_matrix(model, VectorXd::Zero(5)), model.B0);
}

TEST(InputBlocks, MatchesTruncatedChainRule) {
  // d/dt x^alpha along g_i(x) equals sum_r alpha_r x^(alpha - e_r) g_ir(x);
  // evaluate that directly as a polynomial and keep degree <= N.
  oracle::Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.integer(1, 3);
    const int N = rng.integer(1, 3);
    const int k = rng.integer(1, 2);
    const MatrixXd b0 = rng.matrix(n, k);
    std::vector<std::vector<MatrixXd>> bs(k);
    for (int i = 0; i < k; ++i) {
      for (int l = 1; l <= 2; ++l) bs[i].push_back(rng.matrix(n, static_cast<Eigen::Index>(degree_monomials(n, l).size())));
    }
    const MonomialBasis basis = monomial_basis(n, N);
    const CarlemanModel<double> model =
        make_carleman_model<double>(basis, {MatrixXd::Zero(n, n)}, b0, bs);
    const VectorXd x = rng.vector(n);
    const MatrixXd B = eval_input_matrix(model, lift_state(x, basis));
    for (int i = 0; i < k; ++i) {
      std::vector<oracle::Poly> g(n);
      for (int r = 0; r < n; ++r) {
        g[r][Exponent(n, 0)] += b0(r, i);
        for (int l = 1; l <= 2; ++l) {
          const auto mons = degree_monomials(n, l);
          for (std::size_t c = 0; c < mons.size(); ++c) g[r][mons[c]] += bs[i][l - 1](r, c);
        }
      }
      for (int a = 0; a < basis.size(); ++a) {
        oracle::Poly row;
        const Exponent& alpha = basis.exponent(a);
        for (int r = 0; r < n; ++r) {
          if (alpha[r] == 0) continue;
          Exponent lower = alpha;
          lower[r] -= 1;
          for (const auto& [e, c] : g[r]) {
            const Exponent prod = oracle::add(lower, e);
            if (oracle::degree(prod) <= N) row[prod] += alpha[r] * c;
          }
        }
        EXPECT_NEAR(B(a, i), oracle::eval(row, x), 1e-12);
      }
    }
  }
}

TEST(ClosedLoop, ScalarExample) {
  MatrixXd b0 = MatrixXd::Ones(1, 1);
  const CarlemanModel<double> model =
      make_carleman_model<double>(monomial_basis(1, 2), {MatrixXd::Constant(1, 1, -1.0)}, b0, {});
  MatrixXd K(1, 2);
  K << 0.5, 0.0;
  MatrixXd expected(2, 2);
  expected << -1.5, 0, 0, -3;
  EXPECT_LE((closed_loop_matrix(model, K).A_cl - expected).norm(), 1e-15);
  EXPECT_EQ(closed_loop_matrix(model, MatrixXd(MatrixXd::Zero(1, 2))).A_cl, model.A);
}

TEST(ClosedLoop, OrderOneIsLqrClosedLoop) {
  oracle::Rng rng(3);
  const MatrixXd b0 = rng.matrix(3, 2);
  const CarlemanModel<double> model = make_carleman_model<double>(monomial_basis(3, 1), {rng.matrix(3, 3)}, b0,
                                                                  {{rng.matrix(3, 3)}, {rng.matrix(3, 3)}});
  const MatrixXd K = rng.matrix(2, 3);
  EXPECT_LE((closed_loop_matrix(model, K).gain_action - b0 * K).norm(), 1e-14);
}

TEST(ClosedLoop, AgreesWithTruncatedProduct) {
  oracle::Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.integer(1, 3);
    const int N = rng.integer(1, 3);
    const int k = rng.integer(1, 2);
    std::vector<std::vector<MatrixXd>> bs(k);
    for (int i = 0; i < k; ++i) bs[i].push_back(rng.matrix(n, n));
    const MonomialBasis basis = monomial_basis(n, N);
    const CarlemanModel<double> model =
        make_carleman_model<double>(basis, {rng.matrix(n, n)}, rng.matrix(n, k), bs);
    const MatrixXd K = rng.matrix(k, basis.size());
    const VectorXd x = rng.vector(n);
    const VectorXd psi = lift_state(x, basis);
    // Oracle: expand B(psi) K psi symbolically and keep members of degree <= N.
    for (int a = 0; a < basis.size(); ++a) {
      oracle::Poly row;
      for (int i = 0; i < k; ++i) {
        for (int c = 0; c < basis.size(); ++c) {
          row[basis.exponent(c)] += model.B0(a, i) * K(i, c);
          for (int b = 0; b < basis.size(); ++b) {
            const Exponent prod = oracle::add(basis.exponent(b), basis.exponent(c));
            if (oracle::degree(prod) <= N) row[prod] += model.input_state[i](a, b) * K(i, c);
          }
        }
      }
      const double expected = oracle::eval(row, x);
      const double got = (closed_loop_matrix(model, K).gain_action.row(a) * psi)(0);
      EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(QuadBasis, IndexMapIsConsistent) {
  for (int n = 1; n <= 3; ++n) {
    for (int N = 1; N <= 3; ++N) {
      const QuadBasis qb(monomial_basis(n, N));
      const MonomialBasis& b = qb.base();
      std::vector<int> counts(qb.size(), 0);
      for (int a = 0; a < b.size(); ++a) {
        for (int c = 0; c < b.size(); ++c) {
          EXPECT_EQ(qb.extended()[qb.pair_index(a, c)], oracle::add(b.exponent(a), b.exponent(c)));
          EXPECT_EQ(qb.pair_index(a, c), qb.pair_index(c, a));
          ++counts[qb.pair_index(a, c)];
        }
      }
      for (int e = 0; e < qb.size(); ++e) {
        EXPECT_EQ(counts[e], qb.pair_count(e));
        EXPECT_GE(oracle::degree(qb.extended()[e]), 2);
        EXPECT_LE(oracle::degree(qb.extended()[e]), 2 * N);
      }
    }
  }
}

TEST(VectorizeQuadratic, Examples) {
  const QuadBasis scalar(monomial_basis(1, 1));
  EXPECT_EQ(vectorize_quadratic(MatrixXd::Constant(1, 1, 2.5), scalar), VectorXd::Constant(1, 2.5));

  const QuadBasis two(monomial_basis(2, 1));
  VectorXd expected(3);
  expected << 1, 0, 1;
  EXPECT_EQ(vectorize_quadratic(MatrixXd::Identity(2, 2), two), expected);

  const QuadBasis order2(monomial_basis(1, 2));
  MatrixXd P(2, 2);
  P << 1.5, -0.25, -0.25, 3.0;
  expected << 1.5, -0.5, 3.0;
  EXPECT_EQ(vectorize_quadratic(P, order2), expected);

  P(0, 1) += 1e-3;
  EXPECT_THROW(vectorize_quadratic(P, order2), InvalidArgument);
}

TEST(VectorizeQuadratic, LiftConsistencyOnRandomDraws) {
  oracle::Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.integer(1, 3);
    const int N = rng.integer(1, 3);
    const QuadBasis qb(monomial_basis(n, N));
    const int dim = qb.base().size();
    MatrixXd P = rng.matrix(dim, dim);
    P = (P + P.transpose()).eval();
    const VectorXd x = rng.vector(n);
    const VectorXd psi = lift_state(x, qb.base());
    const double quad = psi.dot(P * psi);
    const double lin = vectorize_quadratic(P, qb).dot(extended_lift(psi, qb));
    ASSERT_NEAR(quad, lin, 1e-12 * std::max(1.0, std::abs(quad)));
    // The canonical representative describes the same form and round-trips.
    const MatrixXd C = canonical_quadratic(P, qb);
    ASSERT_NEAR(psi.dot(C * psi), quad, 1e-12 * std::max(1.0, std::abs(quad)));
    ASSERT_LE((canonical_quadratic(C, qb) - C).cwiseAbs().maxCoeff(), 1e-14 * std::max(1.0, C.cwiseAbs().maxCoeff()));
  }
}

TEST(Beta, DefiningIdentity) {
  oracle::Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(1, 3);
    const int N = rng.integer(1, 3);
    const QuadBasis qb(monomial_basis(n, N));
    const int dim = qb.base().size();
    MatrixXd P = rng.matrix(dim, dim);
    P = canonical_quadratic((P + P.transpose()).eval(), qb);
    const VectorXd psi = rng.vector(dim);
    const VectorXd v = rng.vector(dim);
    const VectorXd p = vectorize_quadratic(P, qb);
    const double lhs = psi.dot(P * v);
    EXPECT_NEAR(lhs, p.dot(beta_apply(psi, v, qb)), 1e-12 * std::max(1.0, std::abs(lhs)));
    EXPECT_NEAR(lhs, p.dot(beta_matrix(psi, qb) * v), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(LiftConsistency, ZeroTrajectoryHasZeroResidual) {
  const PolynomialPlant plant = oscillator_plant();
  const CarlemanModel<double> model = carleman_model(plant, monomial_basis(2, 3));
  const Trajectory traj = integrate(plant, {}, VectorXd::Zero(2), 0.0, 1.0);
  for (double r : lift_consistency_check(plant, model, traj)) EXPECT_EQ(r, 0.0);
  Trajectory tiny = traj;
  tiny.times.resize(2);
  EXPECT_THROW(lift_consistency_check(plant, model, tiny), InvalidArgument);
}

TEST(LiftConsistency, ClosedLinearLiftLeavesOnlyDifferenceError) {
  MatrixXd a(2, 2);
  a << -0.3, 1.0, -1.0, -0.2;
  const PolynomialPlant plant("linear", 2, 1, {a}, MatrixXd::Zero(2, 1), {});
  const CarlemanModel<double> model = carleman_model(plant, monomial_basis(2, 2));
  VectorXd x0(2);
  x0 << 1.0, 0.5;
  const auto coarse = lift_consistency_check(plant, model, integrate(plant, {}, x0, 0.0, 5.0, {}, {0.02}));
  const auto fine = lift_consistency_check(plant, model, integrate(plant, {}, x0, 0.0, 5.0, {}, {0.01}));
  for (std::size_t d = 0; d < coarse.size(); ++d) {
    EXPECT_LT(coarse[d], 1e-3);
    EXPECT_NEAR(coarse[d] / fine[d], 4.0, 0.2);  // central differences: O(h^2)
  }
}

TEST(LiftConsistency, OscillatorResidualShrinksWithOrder) {
  const PolynomialPlant plant = oscillator_plant();
  VectorXd x0(2);
  x0 << 0.08, 0.06;
  const Trajectory traj = integrate(plant, {}, x0, 0.0, 10.0, {}, {0.001});
  const auto r2 = lift_consistency_check(plant, carleman_model(plant, monomial_basis(2, 2)), traj);
  const auto r3 = lift_consistency_check(plant, carleman_model(plant, monomial_basis(2, 3)), traj);
  EXPECT_LT(r3[0], r2[0]);
  EXPECT_LT(r3[1], r2[1]);
}

}  // namespace
}  // namespace carleman
