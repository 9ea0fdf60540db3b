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


#include "carleman/structured.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "carleman/lyapunov.hpp"

namespace carleman {

using Eigen::MatrixXd;

namespace {

void check_mask(const MatrixXd& Omega, const CarlemanModel<double>& model) {
  detail::require(Omega.rows() == model.inputs() && Omega.cols() == model.size(), "mask does not conform to the gain");
  detail::require((Omega.array() == 0.0 || Omega.array() == 1.0).all(), "mask entries must be 0 or 1");
}

double l_tolerance(const StructuredConfig& config, const MatrixXd& L) { return config.tol * std::max(1.0, L.norm()); }

void require_linear_stability(const CarlemanModel<double>& model, const MatrixXd& K) {
  const int n = model.state_dim();
  const MatrixXd A_lin = model.linear_A() - model.linear_B() * K.leftCols(n);
  if (!is_hurwitz<double>(A_lin)) {
    throw InfeasibleError("structured gain does not stabilize the linear block (spectral abscissa " +
                          std::to_string(spectral_abscissa<double>(A_lin)) + ")");
  }
}

}  // namespace

MatrixXd mask_complement(const MatrixXd& Pi, const MatrixXd& Omega) {
  detail::require(Pi.rows() == Omega.rows() && Pi.cols() == Omega.cols(), "mask_complement: shape mismatch");
  return Pi.cwiseProduct((1.0 - Omega.array()).matrix());
}

MatrixXd pi_from_p(const MatrixXd& P, const CarlemanModel<double>& model, const MatrixXd& R) {
  return extract_gain(P, model, R).K;
}

Eigen::MatrixXi adjacency_without_links(int agents, const std::vector<std::pair<int, int>>& removed) {
  detail::require(agents >= 1, "adjacency: need at least one agent");
  Eigen::MatrixXi adj = Eigen::MatrixXi::Ones(agents, agents);
  for (auto [a, b] : removed) {
    detail::require(a >= 0 && a < agents && b >= 0 && b < agents && a != b, "adjacency: bad link");
    adj(a, b) = 0;
    adj(b, a) = 0;
  }
  return adj;
}

MatrixXd expand_agent_mask(const Eigen::MatrixXi& adjacency, const MonomialBasis& basis,
                           const std::vector<int>& state_owner, const std::vector<int>& input_owner) {
  const int agents = static_cast<int>(adjacency.rows());
  detail::require(adjacency.cols() == agents, "expand_agent_mask: adjacency must be square");
  detail::require(static_cast<int>(state_owner.size()) == basis.state_dim(),
                  "expand_agent_mask: one owner per state required");
  auto valid = [agents](int a) { return a >= 0 && a < agents; };
  detail::require(std::all_of(state_owner.begin(), state_owner.end(), valid) &&
                      std::all_of(input_owner.begin(), input_owner.end(), valid),
                  "expand_agent_mask: owner index out of range");
  const int k = static_cast<int>(input_owner.size());
  MatrixXd Omega = MatrixXd::Zero(k, basis.size());
  for (int c = 0; c < basis.size(); ++c) {
    std::set<int> involved;
    const Exponent& e = basis.exponent(c);
    for (int s = 0; s < basis.state_dim(); ++s) {
      if (e[s] > 0) involved.insert(state_owner[s]);
    }
    for (int z = 0; z < k; ++z) {
      const int a = input_owner[z];
      const bool allowed = std::all_of(involved.begin(), involved.end(),
                                       [&](int b) { return b == a || adjacency(a, b) != 0; });
      Omega(z, c) = allowed ? 1.0 : 0.0;
    }
  }
  return Omega;
}

void StructuredConfig::validate() const {
  detail::require(tol > 0.0 && inner_tol > 0.0, "structured: tolerances must be positive");
  detail::require(max_iters >= 1 && inner_max >= 1, "structured: iteration budgets must be positive");
}

StructuredResult structured_model_based(const CarlemanModel<double>& model, const CostWeights& weights,
                                        const MatrixXd& Omega, const MatrixXd& K0, const StructuredConfig& config) {
  config.validate();
  weights.validate();
  check_mask(Omega, model);
  detail::require(K0.rows() == model.inputs() && K0.cols() == model.size(), "structured: K0 does not conform");

  StructuredResult result;
  result.mask = Omega;
  MatrixXd K = K0;
  MatrixXd L = MatrixXd::Zero(model.inputs(), model.size());
  MatrixXd P;
  for (int i = 0; i < config.max_iters; ++i) {
    MatrixXd P_prev;
    for (int j = 0; j < config.inner_max; ++j) {
      try {
        P = model_policy_evaluation(model, weights, K).P;
      } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("structured synthesis (outer iteration ") + std::to_string(i) +
                              "): " + e.what());
      }
      ++result.inner_sweeps;
      K = pi_from_p(P, model, weights.R) - L;
      const bool settled = j > 0 && (P - P_prev).norm() <= config.inner_tol * P.norm();
      P_prev = P;
      if (settled) break;
    }
    const MatrixXd Pi = pi_from_p(P, model, weights.R);
    const MatrixXd L_next = mask_complement(Pi, Omega);
    const double dl = (L_next - L).norm();
    result.delta_l.push_back(dl);
    L = L_next;
    K = Pi - L;
    result.iterations = i + 1;
    if (dl <= l_tolerance(config, L)) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) {
    throw InfeasibleError("structured synthesis did not converge in " + std::to_string(config.max_iters) +
                          " outer iterations (last mask change " + std::to_string(result.delta_l.back()) + ")");
  }
  require_linear_stability(model, K);
  result.P = P;
  result.L = L;
  result.gain = {K, GainSource::structured};
  return result;
}

StructuredResult structured_model_free(PolicyEvaluator& evaluator, const CarlemanModel<double>& model,
                                       const CostWeights& weights, const MatrixXd& Omega, const MatrixXd& K0,
                                       const LearningConfig& learn, const StructuredConfig& config) {
  config.validate();
  weights.validate();
  check_mask(Omega, model);

  StructuredResult result;
  result.mask = Omega;
  MatrixXd L = MatrixXd::Zero(model.inputs(), model.size());
  MatrixXd masked;
  MatrixXd actuated = K0;
  const GainRule rule = [&](const PolicyCertificate& cert) {
    const MatrixXd Pi = pi_from_p(cert.P, model, weights.R);
    GainStep step{Pi - L, false};
    // The certificate must belong to the gain being returned, so the
    // actuated gain has to settle as well as the mask correction.
    const double dk = (step.K - actuated).norm();
    actuated = step.K;
    const MatrixXd L_next = mask_complement(Pi, Omega);
    const double dl = (L_next - L).norm();
    result.delta_l.push_back(dl);
    L = L_next;
    masked = Pi - L;
    step.settled = dl <= l_tolerance(config, L) && dk <= config.tol * std::max(1.0, step.K.norm());
    return step;
  };
  LearningResult learned = iterate_policy(evaluator, K0, learn, rule, GainSource::structured);
  result.iterations = learned.log.iterations() + 1;
  result.converged = learned.log.converged;
  result.log = std::move(learned.log);
  result.trajectory = std::move(learned.trajectory);
  if (!result.converged) {
    throw InfeasibleError("model-free structured synthesis did not converge in " + std::to_string(learn.max_iters) +
                          " iterations");
  }
  require_linear_stability(model, masked);
  result.P = learned.certificate.P;
  result.L = L;
  result.gain = {masked, GainSource::structured};
  return result;
}

}  // namespace carleman
