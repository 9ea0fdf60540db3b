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


#include "carleman/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace carleman {

using Eigen::MatrixXd;

double soft_threshold(double w, double mu) {
  if (w > mu) return w - mu;
  if (w < -mu) return w + mu;
  return 0.0;
}

void AdmmConfig::validate() const {
  detail::require(gamma >= 0.0, "admm: gamma must be non-negative");
  detail::require(rho0 > 0.0 && rho_max >= rho0, "admm: need 0 < rho0 <= rho_max");
  detail::require(alpha > 1.0, "admm: alpha must exceed 1");
  detail::require(eps1 > 0.0 && eps2 > 0.0, "admm: tolerances must be positive");
  detail::require(max_inner >= 1, "admm: max_inner must be at least 1");
  detail::require(W.size() == 0 || (W.array() >= 0.0).all(), "admm: weights must be non-negative");
}

MatrixXd AdmmConfig::weights_for(Eigen::Index rows, Eigen::Index cols) const {
  if (W.size() == 0) return MatrixXd::Ones(rows, cols);
  detail::require(W.rows() == rows && W.cols() == cols, "admm: weight matrix does not conform to the gain");
  return W;
}

AdmmState admm_step(const AdmmState& s, double rho, double gamma, const MatrixXd& W, const MatrixXd& Pi) {
  detail::require(rho > 0.0, "admm_step: rho must be positive");
  detail::require(gamma >= 0.0, "admm_step: gamma must be non-negative");
  const auto conforms = [&](const MatrixXd& M) { return M.rows() == Pi.rows() && M.cols() == Pi.cols(); };
  detail::require(conforms(s.K) && conforms(s.L) && conforms(s.Lambda) && conforms(W), "admm_step: shape mismatch");

  AdmmState next;
  next.L = -(s.Lambda + rho * (s.K - Pi)) / (1.0 + rho);
  const MatrixXd target = Pi - next.L - s.Lambda / rho;
  next.K.resize(Pi.rows(), Pi.cols());
  for (Eigen::Index j = 0; j < Pi.cols(); ++j) {
    for (Eigen::Index i = 0; i < Pi.rows(); ++i) next.K(i, j) = soft_threshold(target(i, j), gamma * W(i, j) / rho);
  }
  next.Lambda = s.Lambda + rho * (next.K + next.L - Pi);
  return next;
}

double augmented_lagrangian(const AdmmState& s, const MatrixXd& Pi, double rho, double gamma, const MatrixXd& W) {
  const MatrixXd r = s.K + s.L - Pi;
  return 0.5 * s.L.squaredNorm() + gamma * W.cwiseProduct(s.K).cwiseAbs().sum() + s.Lambda.cwiseProduct(r).sum() +
         0.5 * rho * r.squaredNorm();
}

AdmmState admm_solve(const MatrixXd& Pi, const AdmmConfig& config, AdmmLog* log) {
  config.validate();
  const MatrixXd W = config.weights_for(Pi.rows(), Pi.cols());
  AdmmState s{Pi, MatrixXd::Zero(Pi.rows(), Pi.cols()), MatrixXd::Zero(Pi.rows(), Pi.cols())};
  double rho = config.rho0;
  AdmmLog local;
  for (int z = 0; z < config.max_inner; ++z) {
    AdmmState next = admm_step(s, rho, config.gamma, W, Pi);
    const double dk = (next.K - s.K).norm();
    const double dl = (next.L - s.L).norm();
    local.delta_k.push_back(dk);
    local.delta_l.push_back(dl);
    s = std::move(next);
    local.steps = z + 1;
    rho = std::min(config.alpha * rho, config.rho_max);
    if (dk <= config.eps1 && dl <= config.eps2) {
      local.converged = true;
      break;
    }
  }
  local.final_rho = rho;
  if (log) *log = std::move(local);
  return s;
}

int cardinality(const MatrixXd& K, double zero) { return static_cast<int>((K.array().abs() > zero).count()); }

BandwidthReport bandwidth_metric(const MatrixXd& K, const MonomialBasis& basis, const std::vector<int>& state_owner,
                                 const std::vector<int>& input_owner, int per_link_capacity, double zero) {
  detail::require(K.cols() == basis.size(), "bandwidth: gain does not conform to the basis");
  detail::require(static_cast<int>(state_owner.size()) == basis.state_dim(),
                  "bandwidth: every state needs an owning agent");
  detail::require(static_cast<Eigen::Index>(input_owner.size()) == K.rows(),
                  "bandwidth: every input needs an owning agent");
  detail::require(per_link_capacity >= 0, "bandwidth: capacity must be non-negative");
  // (receiving agent, state) pairs; a state is sent at most once per link.
  std::set<std::pair<int, int>> sent;
  for (Eigen::Index z = 0; z < K.rows(); ++z) {
    const int receiver = input_owner[static_cast<std::size_t>(z)];
    for (int c = 0; c < basis.size(); ++c) {
      if (std::abs(K(z, c)) <= zero) continue;
      const Exponent& e = basis.exponent(c);
      for (int s = 0; s < basis.state_dim(); ++s) {
        if (e[s] > 0 && state_owner[s] != receiver) sent.insert({receiver, s});
      }
    }
  }
  BandwidthReport report;
  for (const auto& [receiver, s] : sent) {
    const int sender = state_owner[s];
    ++report.per_link[{std::min(sender, receiver), std::max(sender, receiver)}];
    ++report.total;
  }
  if (per_link_capacity > 0) {
    for (const auto& [link, count] : report.per_link) {
      if (count > per_link_capacity) ++report.overloaded;
    }
  }
  return report;
}

SparseResult run_sparse(PolicyEvaluator& evaluator, const CarlemanModel<double>& model, const CostWeights& weights,
                        const MatrixXd& K0, const LearningConfig& learn, const AdmmConfig& admm) {
  admm.validate();
  SparseResult result;
  const GainRule rule = [&](const PolicyCertificate& cert) {
    const MatrixXd Pi = extract_gain(cert.P, model, weights.R).K;
    AdmmLog log;
    AdmmState s = admm_solve(Pi, admm, &log);
    result.inner.push_back(std::move(log));
    return GainStep{std::move(s.K), true};
  };
  try {
    result.learning = iterate_policy(evaluator, K0, learn, rule, GainSource::sparse);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("sparse synthesis (gamma ") + std::to_string(admm.gamma) + "): " + e.what());
  }
  if (!result.learning.log.converged) {
    throw InfeasibleError("sparse synthesis (gamma " + std::to_string(admm.gamma) + ") did not settle in " +
                          std::to_string(learn.max_iters) + " iterations");
  }
  return result;
}

}  // namespace carleman
