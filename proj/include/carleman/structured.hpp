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

#include <utility>
#include <vector>

#include "carleman/policy_iteration.hpp"

namespace carleman {

// Topology-constrained gains. A mask Omega (inputs x lifted size, entries 0
// or 1) marks the gain entries that may be nonzero.

/// Pi .* (1 - Omega).
Eigen::MatrixXd mask_complement(const Eigen::MatrixXd& Pi, const Eigen::MatrixXd& Omega);

/// Unconstrained improved gain for P; the same truncated extraction as the
/// learner.
Eigen::MatrixXd pi_from_p(const Eigen::MatrixXd& P, const CarlemanModel<double>& model, const Eigen::MatrixXd& R);

/// All-to-all adjacency over `agents` with the listed (0-based, undirected)
/// links removed. The diagonal is always one.
Eigen::MatrixXi adjacency_without_links(int agents, const std::vector<std::pair<int, int>>& removed);

/// Expands an agent adjacency to a gain mask: input z (owned by agent a) may
/// use column c only if every agent whose state appears in monomial c is a
/// or adjacent to a.
Eigen::MatrixXd expand_agent_mask(const Eigen::MatrixXi& adjacency, const MonomialBasis& basis,
                                  const std::vector<int>& state_owner, const std::vector<int>& input_owner);

struct StructuredConfig {
  double tol = 1e-6;       // stop when ||L_{i+1} - L_i|| <= tol * max(1, ||L_{i+1}||)
  int max_iters = 50;      // outer iterations before declaring the topology infeasible
  int inner_max = 100;     // model-based inner Lyapunov sweeps per outer iteration
  double inner_tol = 1e-12;

  void validate() const;
};

struct StructuredResult {
  FeedbackGain gain;  // Pi_P .* Omega: masked entries are exactly zero
  Eigen::MatrixXd P;
  Eigen::MatrixXd L;
  Eigen::MatrixXd mask;
  std::vector<double> delta_l;  // ||L_{i+1} - L_i|| per outer iteration
  int iterations = 0;
  int inner_sweeps = 0;
  bool converged = false;
  LearningLog log;        // model-free runs only
  Trajectory trajectory;  // model-free learning phase
};

/// Outer loop on L = F(Pi_P) around an inner Kleinman iteration
/// K = Pi_P - L on the truncated model. Throws InfeasibleError when an inner
/// gain fails to stabilize the model, the outer loop exhausts max_iters, or
/// the final linear block is not Hurwitz.
StructuredResult structured_model_based(const CarlemanModel<double>& model, const CostWeights& weights,
                                        const Eigen::MatrixXd& Omega, const Eigen::MatrixXd& K0,
                                        const StructuredConfig& config = {});

/// Data-driven variant: P_i from the evaluator for the actuated K_i, then
/// K_{i+1} = Pi_{P_i} - L_i and L_{i+1} = F(Pi_{P_i}). Stops when P, L and the
/// actuated gain all settle; throws InfeasibleError otherwise.
StructuredResult structured_model_free(PolicyEvaluator& evaluator, const CarlemanModel<double>& model,
                                       const CostWeights& weights, const Eigen::MatrixXd& Omega,
                                       const Eigen::MatrixXd& K0, const LearningConfig& learn,
                                       const StructuredConfig& config = {});

}  // namespace carleman
