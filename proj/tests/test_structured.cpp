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

#include <cmath>

#include "carleman/lyapunov.hpp"
#include "carleman/structured.hpp"
#include "oracles.hpp"

namespace carleman {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

CostWeights unit_weights(int n, int k) { return {MatrixXd::Identity(n, n), MatrixXd::Identity(k, k)}; }

TEST(MaskComplement, Examples) {
  MatrixXd Pi(2, 2);
  Pi << 1, 2, 3, 4;
  MatrixXd Omega(2, 2);
  Omega << 1, 0, 0, 1;
  MatrixXd expected(2, 2);
  expected << 0, 2, 3, 0;
  EXPECT_EQ(mask_complement(Pi, Omega), expected);
  EXPECT_TRUE(mask_complement(Pi, MatrixXd::Ones(2, 2)).isZero(0.0));
  EXPECT_EQ(mask_complement(Pi, MatrixXd::Zero(2, 2)), Pi);
  EXPECT_THROW(mask_complement(Pi, MatrixXd::Ones(2, 3)), InvalidArgument);
}

TEST(PiFromP, OrderOneIsLqrGain) {
  oracle::Rng rng(2);
  const MatrixXd B = rng.matrix(3, 2);
  const PolynomialPlant plant("lin", 3, 2, {rng.matrix(3, 3)}, B, {});
  const auto model = carleman_model(plant, monomial_basis(3, 1));
  MatrixXd P = rng.matrix(3, 3);
  P = (P * P.transpose()).eval();
  EXPECT_LE((pi_from_p(P, model, MatrixXd::Identity(2, 2)) - B.transpose() * P).norm(), 1e-12);
}

TEST(AgentMask, AdjacencyAndExpansion) {
  const Eigen::MatrixXi adj = adjacency_without_links(3, {{0, 2}});
  EXPECT_EQ(adj(0, 2), 0);
  EXPECT_EQ(adj(2, 0), 0);
  EXPECT_EQ(adj(0, 1), 1);
  EXPECT_EQ(adj.diagonal().sum(), 3);
  EXPECT_THROW(adjacency_without_links(3, {{0, 3}}), InvalidArgument);
  EXPECT_THROW(adjacency_without_links(3, {{1, 1}}), InvalidArgument);

  // One state and one input per agent, complete quadratic basis.
  const MonomialBasis basis = monomial_basis(3, 2);
  const MatrixXd Omega = expand_agent_mask(adj, basis, {0, 1, 2}, {0, 1, 2});
  for (int c = 0; c < basis.size(); ++c) {
    const Exponent& e = basis.exponent(c);
    const bool mixes_0_2 = e[0] > 0 && e[2] > 0;
    EXPECT_EQ(Omega(0, c), (e[2] > 0) ? 0.0 : 1.0) << c;
    EXPECT_EQ(Omega(2, c), (e[0] > 0) ? 0.0 : 1.0) << c;
    EXPECT_EQ(Omega(1, c), mixes_0_2 ? 1.0 : 1.0) << c;  // agent 1 sees everybody
  }
  EXPECT_THROW(expand_agent_mask(adj, basis, {0, 1}, {0, 1, 2}), InvalidArgument);
  EXPECT_THROW(expand_agent_mask(adj, basis, {0, 1, 5}, {0, 1, 2}), InvalidArgument);
}

TEST(StructuredModelBased, AllOnesMaskRecoversDenseGain) {
  const PolynomialPlant plant = oscillator_plant();
  const auto model = carleman_model(plant, monomial_basis(2, 2));
  const CostWeights w = unit_weights(2, 1);
  const MatrixXd K0 = initial_gain(model, w).K;
  LearningConfig c;
  c.eps = 1e-13;
  c.max_iters = 60;
  const LearningResult dense = run_model_based(model, w, c, K0);
  const StructuredResult s = structured_model_based(model, w, MatrixXd::Ones(1, model.size()), K0);
  EXPECT_TRUE(s.converged);
  EXPECT_TRUE(s.L.isZero(0.0));
  EXPECT_EQ(s.gain.source, GainSource::structured);
  EXPECT_LE((s.gain.K - dense.gain.K).norm(), 1e-6 * dense.gain.K.norm());
}

TEST(StructuredModelBased, DecoupledSystemGivesScalarGains) {
  MatrixXd A = MatrixXd::Zero(2, 2);
  A.diagonal() << -1.0, 0.5;
  A(0, 1) = 0.0;
  const PolynomialPlant plant("decoupled", 2, 2, {A}, MatrixXd::Identity(2, 2), {});
  const auto model = carleman_model(plant, monomial_basis(2, 1));
  const CostWeights w = unit_weights(2, 2);
  const MatrixXd Omega = MatrixXd::Identity(2, 2);
  const StructuredResult s = structured_model_based(model, w, Omega, initial_gain(model, w).K);
  // Scalar ARE 2 a p - p^2 + 1 = 0.
  EXPECT_NEAR(s.gain.K(0, 0), -1.0 + std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(s.gain.K(1, 1), 0.5 + std::sqrt(1.25), 1e-9);
  EXPECT_EQ(s.gain.K(0, 1), 0.0);
  EXPECT_EQ(s.gain.K(1, 0), 0.0);
}

struct CoupledCase {
  PolynomialPlant plant;
  CarlemanModel<double> model;
  MatrixXd Omega;
};

CoupledCase coupled_case() {
  MatrixXd A(2, 2);
  A << 0.2, 0.6, -0.4, -0.3;
  PolynomialPlant plant("coupled", 2, 2, {A}, MatrixXd::Identity(2, 2), {});
  auto model = carleman_model(plant, monomial_basis(2, 1));
  return {plant, model, MatrixXd::Identity(2, 2)};
}

TEST(StructuredModelBased, CoupledMaskIsEnforcedAndStabilizes) {
  const CoupledCase cc = coupled_case();
  const CostWeights w = unit_weights(2, 2);
  const StructuredResult s = structured_model_based(cc.model, w, cc.Omega, initial_gain(cc.model, w).K);
  EXPECT_TRUE(s.converged);
  EXPECT_LT(mask_complement(s.gain.K, cc.Omega).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(is_hurwitz<double>(cc.model.linear_A() - cc.model.linear_B() * s.gain.K));
  // The correction is active: L carries the forbidden part of Pi.
  EXPECT_GT(s.L.norm(), 1e-3);
  // Lyapunov derivative along the structured closed loop.
  const Trajectory traj = integrate(cc.plant, lifted_controller(cc.model.basis, s.gain.K), VectorXd::Ones(2), 0.0, 5.0);
  double previous = std::numeric_limits<double>::infinity();
  for (const VectorXd& x : traj.states) {
    const double v = x.dot(s.P * x);
    EXPECT_LE(v, previous + 1e-12);
    previous = v;
  }
}

TEST(StructuredModelFree, AgreesWithModelBased) {
  const CoupledCase cc = coupled_case();
  const CostWeights w = unit_weights(2, 2);
  const MatrixXd K0 = initial_gain(cc.model, w).K;
  const StructuredResult mb = structured_model_based(cc.model, w, cc.Omega, K0);
  LearningConfig c;
  c.T = 4.0;
  c.dt = 0.05;
  c.sim_step = 0.001;
  c.max_iters = 40;
  c.eps = 1e-6;
  c.noise.kind = NoiseKind::sinusoids;
  c.noise.amplitude = 0.5;
  c.noise.freq_min = 0.2;
  c.noise.freq_max = 3.0;
  PolicyEvaluator ev(cc.plant, cc.model, w, c, LearningMode::on_policy, VectorXd::Ones(2));
  const StructuredResult mf = structured_model_free(ev, cc.model, w, cc.Omega, K0, c);
  EXPECT_TRUE(mf.converged);
  EXPECT_LE((mf.gain.K - mb.gain.K).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(mask_complement(mf.gain.K, cc.Omega).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT(mf.log.timesteps, 0);
}

TEST(StructuredModelFree, AllOnesMaskMatchesPlainLearning) {
  const CoupledCase cc = coupled_case();
  const CostWeights w = unit_weights(2, 2);
  const MatrixXd K0 = initial_gain(cc.model, w).K;
  LearningConfig c;
  c.T = 4.0;
  c.dt = 0.05;
  c.sim_step = 0.001;
  c.noise.kind = NoiseKind::sinusoids;
  c.noise.amplitude = 0.5;
  c.noise.freq_min = 0.2;
  c.noise.freq_max = 3.0;
  PolicyEvaluator ev(cc.plant, cc.model, w, c, LearningMode::on_policy, VectorXd::Ones(2));
  const StructuredResult mf = structured_model_free(ev, cc.model, w, MatrixXd::Ones(2, 2), K0, c);
  const LearningResult plain = run_on_policy(cc.plant, cc.model, w, c, K0, VectorXd::Ones(2));
  EXPECT_LE((mf.gain.K - plain.gain.K).norm(), 1e-9 * plain.gain.K.norm());
}

TEST(StructuredModelBased, EmptyMaskOnUnstablePlantIsInfeasible) {
  const CoupledCase cc = coupled_case();
  const CostWeights w = unit_weights(2, 2);
  EXPECT_THROW(structured_model_based(cc.model, w, MatrixXd::Zero(2, 2), initial_gain(cc.model, w).K),
               InfeasibleError);
}

TEST(StructuredModelBased, RejectsBadMask) {
  const CoupledCase cc = coupled_case();
  const CostWeights w = unit_weights(2, 2);
  MatrixXd bad = MatrixXd::Ones(2, 2);
  bad(0, 0) = 0.5;
  EXPECT_THROW(structured_model_based(cc.model, w, bad, initial_gain(cc.model, w).K), InvalidArgument);
  StructuredConfig config;
  config.tol = 0.0;
  EXPECT_THROW(config.validate(), InvalidArgument);
}

}  // namespace
}  // namespace carleman
