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
#include <utility>
#include <vector>

#include "carleman/policy_iteration.hpp"

namespace carleman {

// Sparsity-promoting gains: the lasso min 1/2 ||L||^2 + gamma ||W .* K||_1
// subject to K + L = Pi, solved by ADMM inside policy iteration.

constexpr double kZeroEntry = 1e-8;

/// Shrink toward zero: w + mu below -mu, 0 inside [-mu, mu], w - mu above mu.
double soft_threshold(double w, double mu);

struct AdmmConfig {
  double gamma = 0.0;
  double rho0 = 1.0;
  double alpha = 1.1;  // rho <- min(alpha * rho, rho_max) after every inner step
  double rho_max = 1e8;
  Eigen::MatrixXd W;  // entrywise weights; empty means all ones
  double eps1 = 1e-6;
  double eps2 = 1e-6;
  int max_inner = 500;

  void validate() const;
  Eigen::MatrixXd weights_for(Eigen::Index rows, Eigen::Index cols) const;
};

struct AdmmState {
  Eigen::MatrixXd K;
  Eigen::MatrixXd L;
  Eigen::MatrixXd Lambda;
};

/// One ADMM sweep: L-step, K-step (soft threshold at gamma W / rho), dual step.
AdmmState admm_step(const AdmmState& s, double rho, double gamma, const Eigen::MatrixXd& W,
                    const Eigen::MatrixXd& Pi);

/// 1/2||L||^2 + gamma||W.*K||_1 + <Lambda, K + L - Pi> + rho/2 ||K + L - Pi||^2.
double augmented_lagrangian(const AdmmState& s, const Eigen::MatrixXd& Pi, double rho, double gamma,
                            const Eigen::MatrixXd& W);

struct AdmmLog {
  int steps = 0;
  bool converged = false;
  double final_rho = 0.0;
  std::vector<double> delta_k;
  std::vector<double> delta_l;
};

/// Runs admm_step from (Pi, 0, 0) until both ||dK|| <= eps1 and ||dL|| <= eps2
/// or max_inner steps.
AdmmState admm_solve(const Eigen::MatrixXd& Pi, const AdmmConfig& config, AdmmLog* log = nullptr);

/// Entries with magnitude above kZeroEntry.
int cardinality(const Eigen::MatrixXd& K, double zero = kZeroEntry);

struct BandwidthReport {
  int total = 0;
  std::map<std::pair<int, int>, int> per_link;  // (a, b) with a < b -> transmitted states
  int overloaded = 0;                           // links above the per-link capacity
};

/// Counts the states that cross each inter-agent link: state s of agent a
/// crosses link (a, b) when an input of b has a nonzero gain on any column
/// whose monomial contains s.
BandwidthReport bandwidth_metric(const Eigen::MatrixXd& K, const MonomialBasis& basis,
                                 const std::vector<int>& state_owner, const std::vector<int>& input_owner,
                                 int per_link_capacity = 0, double zero = kZeroEntry);

struct SparseResult {
  LearningResult learning;  // gain.source == sparse
  std::vector<AdmmLog> inner;
};

/// Policy iteration where each improvement is the ADMM-sparsified Pi(P_i).
/// Throws InfeasibleError when the outer loop fails to settle within the
/// learning budget.
SparseResult run_sparse(PolicyEvaluator& evaluator, const CarlemanModel<double>& model, const CostWeights& weights,
                        const Eigen::MatrixXd& K0, const LearningConfig& learn, const AdmmConfig& admm);

}  // namespace carleman
