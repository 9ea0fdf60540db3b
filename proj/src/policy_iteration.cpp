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

#include "carleman/policy_iteration.hpp"

#include <Eigen/SVD>

#include <cmath>

#include "carleman/lyapunov.hpp"

namespace carleman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int ratio_or_throw(double num, double den, const std::string& what) {
  const double r = num / den;
  const long m = std::lround(r);
  detail::require(m >= 1 && std::abs(r - static_cast<double>(m)) <= 1e-9 * std::max(1.0, r), what);
  return static_cast<int>(m);
}

// Row layout of a trajectory: `rows` windows of `m` integration steps each.
struct RowGrid {
  int m = 0;
  int rows = 0;
  std::vector<double> weights;  // quadrature weights over the m + 1 samples
};

RowGrid row_grid(const Trajectory& traj, double dt) {
  detail::require(traj.size() >= 2, "data window needs at least 2 samples");
  const double h = traj.step();
  RowGrid g;
  g.m = ratio_or_throw(dt, h, "learning step dt must be a multiple of the trajectory step");
  g.rows = static_cast<int>((traj.size() - 1) / g.m);
  detail::require(g.rows >= 1, "data window is shorter than one learning step");
  g.weights.assign(g.m + 1, 0.0);
  if (g.m % 2 == 0) {
    for (int j = 0; j <= g.m; ++j) g.weights[j] = h / 3.0 * (j == 0 || j == g.m ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0));
  } else {
    for (int j = 0; j <= g.m; ++j) g.weights[j] = h * (j == 0 || j == g.m ? 0.5 : 1.0);
  }
  return g;
}

void check_gain(const MatrixXd& K, const CarlemanModel<double>& model) {
  detail::require(K.rows() == model.inputs() && K.cols() == model.size(), "gain does not conform to model");
  detail::require(K.allFinite(), "gain has non-finite entries");
}

// Integrates 2 beta(psi) v(s) over each row, where v is supplied per sample.
template <typename Integrand>
MatrixXd beta_rows(const Trajectory& traj, const MonomialBasis& basis, const QuadBasis& qb, double dt,
                   Integrand&& v) {
  const RowGrid g = row_grid(traj, dt);
  MatrixXd out = MatrixXd::Zero(g.rows, qb.size());
  for (int r = 0; r < g.rows; ++r) {
    for (int j = 0; j <= g.m; ++j) {
      const std::size_t s = static_cast<std::size_t>(r) * g.m + j;
      const VectorXd psi = basis.lift(traj.states[s]);
      out.row(r) += (2.0 * g.weights[j]) * beta_apply(psi, v(s, psi), qb).transpose();
    }
  }
  return out;
}

}  // namespace

void LearningConfig::validate() const {
  detail::require(T > 0.0 && dt > 0.0 && sim_step > 0.0, "learning: T, dt and sim_step must be positive");
  ratio_or_throw(T, dt, "learning: T must be an integer multiple of dt");
  ratio_or_throw(dt, sim_step, "learning: dt must be an integer multiple of sim_step");
  detail::require(eps > 0.0, "learning: eps must be positive");
  detail::require(ridge >= 0.0, "learning: ridge must be non-negative");
  detail::require(max_iters >= 1, "learning: max_iters must be at least 1");
}

int LearningConfig::rows_per_batch() const { return ratio_or_throw(T, dt, "learning: T must be a multiple of dt"); }
int LearningConfig::substeps() const { return ratio_or_throw(dt, sim_step, "learning: dt must be a multiple of sim_step"); }

std::string to_string(GainSource source) {
  switch (source) {
    case GainSource::learned:
      return "learned";
    case GainSource::structured:
      return "structured";
    case GainSource::sparse:
      return "sparse";
    case GainSource::initial:
      return "initial";
  }
  return "learned";
}

DataBatch collect_batch(const Trajectory& traj, const MatrixXd& K, const CostWeights& weights, const QuadBasis& qb,
                        double dt) {
  const MonomialBasis& basis = qb.base();
  detail::require(K.cols() == basis.size() && K.rows() == weights.R.rows(), "collect_batch: gain has wrong shape");
  const RowGrid g = row_grid(traj, dt);
  DataBatch batch{MatrixXd::Zero(g.rows, qb.size()), VectorXd::Zero(g.rows)};
  std::vector<double> f(traj.size());
  std::vector<VectorXd> ext(g.rows + 1);
  for (std::size_t s = 0; s <= static_cast<std::size_t>(g.rows) * g.m; ++s) {
    const VectorXd& x = traj.states[s];
    const VectorXd psi = basis.lift(x);
    const VectorXd u = K * psi;
    f[s] = x.dot(weights.Q1 * x) + u.dot(weights.R * u);
    if (s % g.m == 0) ext[s / g.m] = extended_lift(psi, qb);
  }
  for (int r = 0; r < g.rows; ++r) {
    batch.Psi.row(r) = (ext[r] - ext[r + 1]).transpose();
    double y = 0.0;
    for (int j = 0; j <= g.m; ++j) y += g.weights[j] * f[static_cast<std::size_t>(r) * g.m + j];
    batch.Y(r) = y;
  }
  return batch;
}

MatrixXd noise_correction_onpolicy(const MatrixXd& Psi, const Trajectory& traj, const CarlemanModel<double>& model,
                                   const QuadBasis& qb, double dt) {
  detail::require(traj.noise.size() == traj.size(), "noise correction: trajectory has no recorded noise");
  detail::require(!traj.noise.empty() && traj.noise.front().size() == model.inputs(),
                  "noise correction: noise channels do not match model inputs");
  MatrixXd corr = beta_rows(traj, model.basis, qb, dt, [&](std::size_t s, const VectorXd& psi) -> VectorXd {
    return eval_input_matrix(model, psi) * traj.noise[s];
  });
  detail::require(corr.rows() == Psi.rows() && corr.cols() == Psi.cols(), "noise correction: Psi has wrong shape");
  return Psi + corr;
}

MatrixXd offpolicy_correction(const MatrixXd& Psi, const Trajectory& traj, const CarlemanModel<double>& model,
                              const QuadBasis& qb, const MatrixXd& K, double dt) {
  check_gain(K, model);
  detail::require(!traj.inputs.empty() && traj.inputs.front().size() == model.inputs(),
                  "off-policy correction: inputs do not match model");
  const MatrixXd action = closed_loop_matrix(model, K).gain_action;
  MatrixXd corr = beta_rows(traj, model.basis, qb, dt, [&](std::size_t s, const VectorXd& psi) -> VectorXd {
    return eval_input_matrix(model, psi) * traj.inputs[s] + action * psi;
  });
  detail::require(corr.rows() == Psi.rows() && corr.cols() == Psi.cols(), "off-policy correction: Psi has wrong shape");
  return Psi + corr;
}

PolicyCertificate solve_p(const MatrixXd& Psi, const VectorXd& Y, const QuadBasis& qb, double ridge) {
  detail::require(Psi.rows() >= 1, "solve_p: need at least one data row");
  detail::require(Psi.cols() == qb.size() && Y.size() == Psi.rows(), "solve_p: data does not conform to basis");
  detail::require(ridge >= 0.0, "solve_p: ridge must be non-negative");
  detail::require(Psi.allFinite() && Y.allFinite(), "solve_p: non-finite data");

  // Work with unit-norm columns; monomials of different degree differ by
  // orders of magnitude.
  VectorXd scale = Psi.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const MatrixXd A = Psi * scale.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sigma = svd.singularValues();
  const Eigen::Index full = std::min(A.rows(), A.cols());

  const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
  // Columns beyond the row count are unconstrained: their singular values are zero.
  const double smin = full < A.cols() ? 0.0 : sigma(full - 1);
  const double cond = std::sqrt((smax * smax + ridge) / (smin * smin + ridge));
  if (!(cond <= 1e12)) {
    throw IllConditionedError("solve_p: data matrix is rank deficient (condition " + std::to_string(cond) +
                                  "); increase excitation or the ridge parameter",
                              cond);
  }
  const VectorXd uty = svd.matrixU().transpose() * Y;
  VectorXd coeff(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma(i);
    const double denom = s * s + ridge;
    coeff(i) = denom > 0.0 ? s * uty(i) / denom : 0.0;
  }
  const VectorXd q = svd.matrixV() * coeff;

  PolicyCertificate cert;
  cert.p_bar = q.cwiseQuotient(scale);
  cert.P = unvectorize_quadratic(cert.p_bar, qb);
  const double ynorm = Y.norm();
  const double res = (Psi * cert.p_bar - Y).norm();
  cert.residual = ynorm > 0.0 ? res / ynorm : res;
  cert.condition = cond;
  return cert;
}

namespace {

void check_diagonal_r(const MatrixXd& R, int k) {
  detail::require(R.rows() == k && R.cols() == k, "R does not match the input dimension");
  for (int i = 0; i < k; ++i) {
    detail::require(R(i, i) > 0.0, "R must have a positive diagonal");
    for (int j = 0; j < k; ++j) {
      if (i != j && R(i, j) != 0.0) throw InvalidArgument("gain extraction is implemented for diagonal R only");
    }
  }
}

}  // namespace

FeedbackGain extract_gain(const MatrixXd& P, const CarlemanModel<double>& model, const MatrixXd& R) {
  const int dim = model.size();
  const int k = model.inputs();
  detail::require(P.rows() == dim && P.cols() == dim, "extract_gain: P does not conform to model");
  check_diagonal_r(R, k);
  MatrixXd K = model.B0.transpose() * P;
  for (int z = 0; z < k; ++z) {
    const MatrixXd M = model.input_state[z].transpose() * P;
    for (int b = 0; b < dim; ++b) {
      for (int c = 0; c < dim; ++c) {
        if (M(b, c) == 0.0) continue;
        const int p = model.basis.product_index(b, c);
        if (p >= 0) K(z, p) += M(b, c);
      }
    }
    K.row(z) /= R(z, z);
  }
  return {K, GainSource::learned};
}

VectorXd eval_trunc_term(const MatrixXd& P, const CarlemanModel<double>& model, const VectorXd& x, const MatrixXd& R) {
  const int dim = model.size();
  const int k = model.inputs();
  detail::require(P.rows() == dim && P.cols() == dim, "eval_trunc_term: P does not conform to model");
  check_diagonal_r(R, k);
  const VectorXd psi = model.basis.lift(x);
  VectorXd out = VectorXd::Zero(k);
  for (int z = 0; z < k; ++z) {
    const MatrixXd M = model.input_state[z].transpose() * P;
    double dropped = 0.0;
    for (int b = 0; b < dim; ++b) {
      for (int c = 0; c < dim; ++c) {
        if (model.basis.product_index(b, c) < 0) dropped += M(b, c) * psi(b) * psi(c);
      }
    }
    out(z) = dropped / R(z, z);
  }
  return out;
}

FeedbackGain initial_gain(const CarlemanModel<double>& model, const CostWeights& weights) {
  const auto sol = solve_care<double>(model.linear_A(), model.linear_B(), weights.Q1, weights.R);
  MatrixXd K = MatrixXd::Zero(model.inputs(), model.size());
  K.leftCols(model.state_dim()) = sol.K;
  return {K, GainSource::initial};
}

Controller lifted_controller(const MonomialBasis& basis, const MatrixXd& K) {
  detail::require(K.cols() == basis.size(), "lifted_controller: gain does not conform to basis");
  return [basis, K](double, const VectorXd& x) -> VectorXd { return -(K * basis.lift(x)); };
}

PolicyCertificate evaluate_policy(const Trajectory& traj, const CarlemanModel<double>& model,
                                  const CostWeights& weights, const QuadBasis& qb, const MatrixXd& K,
                                  const LearningConfig& config) {
  const DataBatch batch = collect_batch(traj, K, weights, qb, config.dt);
  const MatrixXd Psi = noise_correction_onpolicy(batch.Psi, traj, model, qb, config.dt);
  return solve_p(Psi, batch.Y, qb, config.ridge);
}

namespace {

SimOptions sim_options(const LearningConfig& config) {
  SimOptions o;
  o.step = config.sim_step;
  o.hold = config.hold;
  return o;
}

// Records a certificate; returns true once the change in P is within tolerance.
bool record(LearningLog& log, const PolicyCertificate& cert, const MatrixXd& K, const LearningConfig& config) {
  log.residuals.push_back(cert.residual);
  log.conditions.push_back(cert.condition);
  log.gains.push_back(K);
  bool done = false;
  if (!log.snapshots.empty()) {
    const double dp = (cert.P - log.snapshots.back()).norm();
    log.delta_p.push_back(dp);
    done = dp <= config.eps * cert.P.norm();
  }
  log.snapshots.push_back(cert.P);
  return done;
}

}  // namespace

std::string to_string(LearningMode mode) {
  switch (mode) {
    case LearningMode::on_policy:
      return "on-policy";
    case LearningMode::off_policy:
      return "off-policy";
    case LearningMode::model_based:
      return "model-based";
  }
  return "on-policy";
}

LearningMode learning_mode_from_string(const std::string& name) {
  if (name == "on-policy") return LearningMode::on_policy;
  if (name == "off-policy") return LearningMode::off_policy;
  if (name == "model-based") return LearningMode::model_based;
  throw InvalidArgument("unknown learning mode '" + name + "'");
}

MatrixXd lifted_state_weight(const CarlemanModel<double>& model, const CostWeights& weights) {
  detail::require(weights.Q1.rows() == model.state_dim(), "lifted_state_weight: Q1 does not match the model");
  MatrixXd Q = MatrixXd::Zero(model.size(), model.size());
  Q.topLeftCorner(model.state_dim(), model.state_dim()) = weights.Q1;
  return Q;
}

PolicyCertificate model_policy_evaluation(const CarlemanModel<double>& model, const CostWeights& weights,
                                          const MatrixXd& K) {
  check_gain(K, model);
  const MatrixXd A_cl = closed_loop_matrix(model, K).A_cl;
  if (!is_hurwitz<double>(A_cl)) {
    throw InfeasibleError("model-based evaluation: gain does not stabilize the truncated model (spectral abscissa " +
                          std::to_string(spectral_abscissa<double>(A_cl)) + ")");
  }
  const MatrixXd C = lifted_state_weight(model, weights) + K.transpose() * weights.R * K;
  const QuadBasis qb(model.basis);
  PolicyCertificate cert;
  cert.P = canonical_quadratic(solve_lyapunov<double>(A_cl, C), qb);
  cert.p_bar = vectorize_quadratic(cert.P, qb);
  cert.residual = 0.0;
  cert.condition = 1.0;
  return cert;
}

PolicyEvaluator::PolicyEvaluator(const CarlemanModel<double>& model, const CostWeights& weights,
                                 const LearningConfig& config)
    : model_(model), weights_(weights), config_(config), mode_(LearningMode::model_based), qb_(model.basis) {
  config.validate();
  weights.validate();
  detail::require(weights.Q1.rows() == model.state_dim() && weights.R.rows() == model.inputs(),
                  "learning: weights do not match model");
}

PolicyEvaluator::PolicyEvaluator(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                                 const CostWeights& weights, const LearningConfig& config, LearningMode mode,
                                 const VectorXd& x0, const std::optional<MatrixXd>& K_behavior, double t0)
    : plant_(&plant), model_(model), weights_(weights), config_(config), mode_(mode), qb_(model.basis), x_(x0), t_(t0) {
  config.validate();
  weights.validate();
  detail::require(weights.Q1.rows() == model.state_dim() && weights.R.rows() == model.inputs(),
                  "learning: weights do not match model");
  detail::require(mode != LearningMode::model_based, "model-based evaluation takes no plant");
  detail::require(plant.state_dim() == model.state_dim() && plant.input_dim() == model.inputs(),
                  "learning: model does not match plant");
  detail::require(x0.size() == plant.state_dim(), "learning: x0 has wrong dimension");
  noise_ = make_noise(config.noise, plant.input_dim());
  if (mode == LearningMode::on_policy) {
    detail::require(static_cast<bool>(noise_), "on-policy learning needs an exploration signal");
    return;
  }
  const MatrixXd Kb = K_behavior ? *K_behavior : MatrixXd::Zero(model.inputs(), model.size());
  check_gain(Kb, model);
  try {
    trajectory_ = integrate(plant, lifted_controller(model.basis, Kb), x0, t0, config.T, noise_, sim_options(config));
  } catch (const DivergedError& e) {
    throw DivergedError(std::string(e.what()) + " (off-policy excitation phase)", e.last_time());
  }
  timesteps_ = config.rows_per_batch();
  learning_time_ = config.T;
}

PolicyCertificate PolicyEvaluator::evaluate(const MatrixXd& K, int iter) {
  check_gain(K, model_);
  PolicyCertificate cert;
  switch (mode_) {
    case LearningMode::model_based:
      cert = model_policy_evaluation(model_, weights_, K);
      break;
    case LearningMode::on_policy: {
      Trajectory segment;
      try {
        segment = integrate(*plant_, lifted_controller(model_.basis, K), x_, t_, config_.T, noise_, sim_options(config_));
      } catch (const DivergedError& e) {
        throw DivergedError(std::string(e.what()) + " (learning iteration " + std::to_string(iter) + ")",
                            e.last_time());
      }
      try {
        cert = evaluate_policy(segment, model_, weights_, qb_, K, config_);
      } catch (const IllConditionedError& e) {
        throw IllConditionedError(std::string(e.what()) + " (learning iteration " + std::to_string(iter) + ")",
                                  e.condition());
      }
      x_ = segment.states.back();
      t_ += config_.T;
      trajectory_.append(segment);
      timesteps_ += config_.rows_per_batch();
      learning_time_ += config_.T;
      break;
    }
    case LearningMode::off_policy: {
      const DataBatch batch = collect_batch(trajectory_, K, weights_, qb_, config_.dt);
      const MatrixXd Psi = offpolicy_correction(batch.Psi, trajectory_, model_, qb_, K, config_.dt);
      try {
        cert = solve_p(Psi, batch.Y, qb_, config_.ridge);
      } catch (const IllConditionedError& e) {
        throw IllConditionedError(std::string(e.what()) + " (off-policy iteration " + std::to_string(iter) + ")",
                                  e.condition());
      }
      break;
    }
  }
  cert.iter = iter;
  return cert;
}

LearningResult iterate_policy(PolicyEvaluator& evaluator, const MatrixXd& K0, const LearningConfig& config,
                              const GainRule& rule, GainSource source) {
  LearningResult result;
  MatrixXd K = K0;
  for (int i = 0; i <= config.max_iters; ++i) {
    const PolicyCertificate cert = evaluator.evaluate(K, i);
    const bool settled_p = record(result.log, cert, K, config);
    result.certificate = cert;
    const GainStep step = rule(cert);
    K = step.K;
    if (!K.allFinite()) throw DivergedError("updated gain is not finite", evaluator.time());
    if (settled_p && step.settled) {
      result.log.converged = true;
      break;
    }
  }
  result.log.timesteps = evaluator.timesteps();
  result.log.learning_time = evaluator.learning_time();
  result.trajectory = evaluator.trajectory();
  result.gain = {K, source};
  return result;
}

GainRule greedy_rule(const CarlemanModel<double>& model, const MatrixXd& R) {
  return [&model, R](const PolicyCertificate& cert) { return GainStep{extract_gain(cert.P, model, R).K, true}; };
}

LearningResult run_on_policy(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                             const CostWeights& weights, const LearningConfig& config, const MatrixXd& K0,
                             const VectorXd& x0, double t0) {
  check_gain(K0, model);
  PolicyEvaluator evaluator(plant, model, weights, config, LearningMode::on_policy, x0, {}, t0);
  return iterate_policy(evaluator, K0, config, greedy_rule(model, weights.R));
}

LearningResult run_off_policy(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                              const CostWeights& weights, const LearningConfig& config, const MatrixXd& K0,
                              const VectorXd& x0, const std::optional<MatrixXd>& K_behavior, double t0) {
  check_gain(K0, model);
  PolicyEvaluator evaluator(plant, model, weights, config, LearningMode::off_policy, x0, K_behavior, t0);
  return iterate_policy(evaluator, K0, config, greedy_rule(model, weights.R));
}

LearningResult run_model_based(const CarlemanModel<double>& model, const CostWeights& weights,
                               const LearningConfig& config, const MatrixXd& K0) {
  check_gain(K0, model);
  PolicyEvaluator evaluator(model, weights, config);
  return iterate_policy(evaluator, K0, config, greedy_rule(model, weights.R));
}

}  // namespace carleman
