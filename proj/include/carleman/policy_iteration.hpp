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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carleman/noise.hpp"
#include "carleman/plant.hpp"
#include "carleman/quad_basis.hpp"

namespace carleman {

struct LearningConfig {
  double T = 2.0;          // policy-update interval (s); off-policy: excitation length
  double dt = 0.1;         // learning sample step (one data row per dt)
  double sim_step = 0.01;  // integration step; dt must be a multiple of it
  ControlHold hold = ControlHold::continuous;
  int max_iters = 20;
  double eps = 1e-4;     // stop when ||P_i - P_{i-1}||_F <= eps * ||P_i||_F
  double ridge = 0.0;  // Tikhonov weight on the column-normalized data matrix
  NoiseSpec noise;

  void validate() const;
  int rows_per_batch() const;
  int substeps() const;
};

struct PolicyCertificate {
  Eigen::MatrixXd P;
  Eigen::VectorXd p_bar;
  int iter = 0;
  double residual = 0.0;
  double condition = 0.0;
};

enum class GainSource { learned, structured, sparse, initial };
std::string to_string(GainSource source);

struct FeedbackGain {
  Eigen::MatrixXd K;
  GainSource source = GainSource::learned;
};

struct LearningLog {
  std::vector<Eigen::MatrixXd> snapshots;  // P_0 .. P_iters
  std::vector<Eigen::MatrixXd> gains;      // gain actuated (or evaluated) for each snapshot
  std::vector<double> delta_p;             // ||P_i - P_{i-1}||_F, i >= 1
  std::vector<double> residuals;
  std::vector<double> conditions;
  long timesteps = 0;  // data rows consumed
  double learning_time = 0.0;
  bool converged = false;

  int iterations() const { return static_cast<int>(snapshots.size()) - 1; }
};

struct LearningResult {
  PolicyCertificate certificate;
  FeedbackGain gain;
  LearningLog log;
  Trajectory trajectory;  // learning phase (for plots and exports)
};

/// Data rows from a trajectory sampled at the integration step: row r covers
/// [t_r, t_r + dt]. Psi row = extended(t_r) - extended(t_r + dt) and Y row =
/// integral of x'Q1x + psi'K'RKpsi. Integrals use Simpson's rule over the
/// substeps when their count is even, trapezoid otherwise.
struct DataBatch {
  Eigen::MatrixXd Psi;
  Eigen::VectorXd Y;
};

DataBatch collect_batch(const Trajectory& traj, const Eigen::MatrixXd& K, const CostWeights& weights,
                        const QuadBasis& qb, double dt);

/// Psi + rows of integral 2 beta(psi) B(psi) noise.
Eigen::MatrixXd noise_correction_onpolicy(const Eigen::MatrixXd& Psi, const Trajectory& traj,
                                          const CarlemanModel<double>& model, const QuadBasis& qb, double dt);

/// Psi + rows of integral 2 beta(psi) (B(psi) u + Kc(K) psi) with u the
/// applied input and Kc(K) the constant closed-loop action of the candidate
/// gain. For data generated by u = -K psi + noise this reduces to the
/// on-policy correction up to truncated terms.
Eigen::MatrixXd offpolicy_correction(const Eigen::MatrixXd& Psi, const Trajectory& traj,
                                     const CarlemanModel<double>& model, const QuadBasis& qb,
                                     const Eigen::MatrixXd& K, double dt);

PolicyCertificate solve_p(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& Y, const QuadBasis& qb, double ridge);

/// Truncated gain K with u = -K psi: channel z is
/// (B0_z' P + quadrized(Bs_z' P)) / r_zz, dropping products outside the basis.
FeedbackGain extract_gain(const Eigen::MatrixXd& P, const CarlemanModel<double>& model, const Eigen::MatrixXd& R);

/// Part of R^-1 B(psi)' P psi discarded by extract_gain, per channel.
Eigen::VectorXd eval_trunc_term(const Eigen::MatrixXd& P, const CarlemanModel<double>& model,
                                const Eigen::VectorXd& x, const Eigen::MatrixXd& R);

/// LQR gain of the degree-one block, zero-padded over the lifted basis.
FeedbackGain initial_gain(const CarlemanModel<double>& model, const CostWeights& weights);

Controller lifted_controller(const MonomialBasis& basis, const Eigen::MatrixXd& K);

LearningResult run_on_policy(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                             const CostWeights& weights, const LearningConfig& config, const Eigen::MatrixXd& K0,
                             const Eigen::VectorXd& x0, double t0 = 0.0);

/// Collects one excitation batch of length config.T with u = -K_behavior psi
/// + noise (K_behavior defaults to zero), then iterates on the stored data
/// starting from K0.
LearningResult run_off_policy(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                              const CostWeights& weights, const LearningConfig& config, const Eigen::MatrixXd& K0,
                              const Eigen::VectorXd& x0, const std::optional<Eigen::MatrixXd>& K_behavior = {},
                              double t0 = 0.0);

/// Learns P for a fixed actuated gain: one on-policy evaluation step.
PolicyCertificate evaluate_policy(const Trajectory& traj, const CarlemanModel<double>& model,
                                  const CostWeights& weights, const QuadBasis& qb, const Eigen::MatrixXd& K,
                                  const LearningConfig& config);

/// How P_i is obtained for a gain: from fresh closed-loop data, from one
/// stored excitation batch, or from a Lyapunov solve on the truncated model.
enum class LearningMode { on_policy, off_policy, model_based };
std::string to_string(LearningMode mode);
LearningMode learning_mode_from_string(const std::string& name);

/// Q1 embedded in the top-left block of a lifted-size zero matrix.
Eigen::MatrixXd lifted_state_weight(const CarlemanModel<double>& model, const CostWeights& weights);

/// Canonical P with A_cl(K)'P + P A_cl(K) + Q_N + K'RK = 0 on the truncated
/// model. Throws InfeasibleError when A_cl(K) is not Hurwitz.
PolicyCertificate model_policy_evaluation(const CarlemanModel<double>& model, const CostWeights& weights,
                                          const Eigen::MatrixXd& K);

/// Produces P_i for successive gains. Data modes own the learning-phase
/// trajectory; the plant and model must outlive the evaluator.
class PolicyEvaluator {
 public:
  /// Model-based evaluation.
  PolicyEvaluator(const CarlemanModel<double>& model, const CostWeights& weights, const LearningConfig& config);
  /// Data-driven evaluation; off-policy collects its batch here.
  PolicyEvaluator(const PolynomialPlant& plant, const CarlemanModel<double>& model, const CostWeights& weights,
                  const LearningConfig& config, LearningMode mode, const Eigen::VectorXd& x0,
                  const std::optional<Eigen::MatrixXd>& K_behavior = {}, double t0 = 0.0);

  PolicyCertificate evaluate(const Eigen::MatrixXd& K, int iter);

  LearningMode mode() const noexcept { return mode_; }
  const Trajectory& trajectory() const noexcept { return trajectory_; }
  long timesteps() const noexcept { return timesteps_; }
  double learning_time() const noexcept { return learning_time_; }
  double time() const noexcept { return t_; }

 private:
  const PolynomialPlant* plant_ = nullptr;
  const CarlemanModel<double>& model_;
  CostWeights weights_;
  LearningConfig config_;
  LearningMode mode_;
  QuadBasis qb_;
  NoiseSignal noise_;
  Trajectory trajectory_;
  Eigen::VectorXd x_;
  double t_ = 0.0;
  long timesteps_ = 0;
  double learning_time_ = 0.0;
};

/// Next gain from a certificate; `settled` is false while a secondary
/// criterion (for example the structure mask) still moves.
struct GainStep {
  Eigen::MatrixXd K;
  bool settled = true;
};
using GainRule = std::function<GainStep(const PolicyCertificate&)>;

/// Shared iteration driver: evaluate K_i, record, apply the rule. Stops when
/// ||P_i - P_{i-1}|| <= eps ||P_i|| and the rule reports settled.
LearningResult iterate_policy(PolicyEvaluator& evaluator, const Eigen::MatrixXd& K0, const LearningConfig& config,
                              const GainRule& rule, GainSource source = GainSource::learned);

/// K_{i+1} = extract_gain(P_i).
GainRule greedy_rule(const CarlemanModel<double>& model, const Eigen::MatrixXd& R);

/// Kleinman-type iteration on the truncated model (no data).
LearningResult run_model_based(const CarlemanModel<double>& model, const CostWeights& weights,
                               const LearningConfig& config, const Eigen::MatrixXd& K0);

}  // namespace carleman
