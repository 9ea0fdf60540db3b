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

#include "carleman/plant.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace carleman {

PolynomialPlant::PolynomialPlant(std::string name, int n, int k, std::vector<Eigen::MatrixXd> taylor,
                                 Eigen::MatrixXd input_const, std::vector<std::vector<Eigen::MatrixXd>> input_state)
    : name_(std::move(name)),
      n_(n),
      k_(k),
      taylor_(std::move(taylor)),
      input_const_(std::move(input_const)),
      input_state_(std::move(input_state)) {
  detail::require(n_ >= 1 && k_ >= 1, "plant needs at least one state and one input");
  detail::require(input_const_.rows() == n_ && input_const_.cols() == k_, "plant: input_const must be n x k");
  detail::require(input_state_.empty() || static_cast<int>(input_state_.size()) == k_,
                  "plant: input_state needs one entry per channel");
  drift_poly_ = poly_from_coefficients<double>(n_, taylor_, 1);
  for (int i = 0; i < k_; ++i) {
    PolyVector<double> channel =
        input_state_.empty() ? PolyVector<double>(n_) : poly_from_coefficients<double>(n_, input_state_[i], 1);
    input_poly_.push_back(std::move(channel));
  }
  z_star = Eigen::VectorXd::Zero(n_);
  w_star = Eigen::VectorXd::Zero(k_);
}

Eigen::VectorXd PolynomialPlant::poly_drift(const Eigen::VectorXd& x) const {
  detail::require(x.size() == n_, "drift: state has wrong dimension");
  return eval_poly(drift_poly_, x);
}

Eigen::MatrixXd PolynomialPlant::poly_input(const Eigen::VectorXd& x) const {
  detail::require(x.size() == n_, "input_matrix: state has wrong dimension");
  Eigen::MatrixXd g = input_const_;
  for (int i = 0; i < k_; ++i) g.col(i) += eval_poly(input_poly_[i], x);
  return g;
}

Eigen::VectorXd PolynomialPlant::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd dx = exact_drift ? exact_drift(x) : poly_drift(x);
  if (exact_input) {
    dx += exact_input(x) * u;
  } else {
    dx += poly_input(x) * u;
  }
  return dx;
}

Eigen::VectorXd drift(const PolynomialPlant& plant, const Eigen::VectorXd& x) { return plant.poly_drift(x); }

Eigen::MatrixXd input_matrix(const PolynomialPlant& plant, const Eigen::VectorXd& x) {
  return plant.poly_input(x);
}

CarlemanModel<double> carleman_model(const PolynomialPlant& plant, const MonomialBasis& basis) {
  detail::require(basis.state_dim() == plant.state_dim(), "carleman_model: basis does not match plant");
  return make_carleman_model<double>(basis, plant.taylor(), plant.input_const(), plant.input_state());
}

void CostWeights::validate() const {
  detail::require(Q1.rows() == Q1.cols() && R.rows() == R.cols(), "weights must be square");
  detail::require((Q1 - Q1.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "Q1 must be symmetric");
  detail::require((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q(Q1, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r(R, Eigen::EigenvaluesOnly);
  detail::require(q.eigenvalues().minCoeff() >= -1e-12, "Q1 must be positive semidefinite");
  detail::require(r.eigenvalues().minCoeff() > 0.0, "R must be positive definite");
}

void Trajectory::append(const Trajectory& other) {
  std::size_t first = 0;
  if (!times.empty() && !other.times.empty() && std::abs(other.times.front() - times.back()) < 1e-9) first = 1;
  for (std::size_t i = first; i < other.size(); ++i) {
    times.push_back(other.times[i]);
    states.push_back(other.states[i]);
    inputs.push_back(other.inputs[i]);
    noise.push_back(other.noise[i]);
  }
}

namespace {

bool escaped(const Eigen::VectorXd& x, double bound) { return !x.allFinite() || x.norm() > bound; }

}  // namespace

Trajectory integrate(const PolynomialPlant& plant, const Controller& controller, const Eigen::VectorXd& x0,
                     double t0, double duration, const NoiseSignal& noise, const SimOptions& options) {
  const int k = plant.input_dim();
  detail::require(x0.size() == plant.state_dim(), "integrate: x0 has wrong dimension");
  detail::require(options.step > 0.0, "integrate: step must be positive");
  detail::require(duration >= 0.0, "integrate: duration must be non-negative");
  const double ratio = duration / options.step;
  const long steps = std::lround(ratio);
  detail::require(std::abs(ratio - static_cast<double>(steps)) <= 1e-9 * std::max(1.0, ratio),
                  "integrate: duration must be a multiple of the step");
  const double h = options.step;

  auto noise_at = [&](double t) -> Eigen::VectorXd {
    if (!noise) return Eigen::VectorXd::Zero(k);
    Eigen::VectorXd w = noise(t);
    detail::require(w.size() == k, "integrate: noise has wrong dimension");
    return w;
  };
  auto control_at = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (!controller) return Eigen::VectorXd::Zero(k);
    Eigen::VectorXd u = controller(t, x);
    detail::require(u.size() == k, "integrate: controller output has wrong dimension");
    return u;
  };

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  traj.noise.reserve(steps + 1);

  Eigen::VectorXd x = x0;
  if (escaped(x, options.divergence_bound)) throw DivergedError("integrate: initial state outside bound", t0);
  for (long s = 0; s <= steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    const Eigen::VectorXd u = control_at(t, x);
    const Eigen::VectorXd w = noise_at(t);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(u + w);
    traj.noise.push_back(w);
    if (s == steps) break;

    auto stage = [&](double ts, const Eigen::VectorXd& xs) {
      const Eigen::VectorXd us = options.hold == ControlHold::continuous ? control_at(ts, xs) : u;
      return plant.rhs(xs, us + noise_at(ts));
    };
    const Eigen::VectorXd k1 = plant.rhs(x, u + w);
    const Eigen::VectorXd k2 = stage(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = stage(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = stage(t + h, x + h * k3);
    Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (escaped(next, options.divergence_bound)) {
      throw DivergedError("integrate: state diverged after t = " + std::to_string(t), t);
    }
    x = std::move(next);
  }
  return traj;
}

double cost_functional(const Trajectory& traj, const CostWeights& weights, double horizon) {
  detail::require(!traj.empty(), "cost_functional: empty trajectory");
  detail::require(horizon >= 0.0, "cost_functional: negative horizon");
  const double t_end = traj.times.front() + horizon;
  detail::require(t_end <= traj.times.back() + 1e-9, "cost_functional: horizon exceeds trajectory");
  auto integrand = [&](std::size_t i) {
    const Eigen::VectorXd& x = traj.states[i];
    const Eigen::VectorXd u = traj.policy_input(i);
    return x.dot(weights.Q1 * x) + u.dot(weights.R * u);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size() && traj.times[i] < t_end - 1e-12; ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    total += 0.5 * dt * (integrand(i) + integrand(i + 1));
  }
  return 0.5 * total;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.empty()) return;
  const auto n = traj.states.front().size();
  const auto k = traj.inputs.front().size();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= k; ++i) out << ",u" << i;
  for (Eigen::Index i = 1; i <= k; ++i) out << ",noise" << i;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out << buf;
  };
  for (std::size_t r = 0; r < traj.size(); ++r) {
    put(traj.times[r]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',', put(traj.states[r](i));
    for (Eigen::Index i = 0; i < k; ++i) out << ',', put(traj.inputs[r](i));
    for (Eigen::Index i = 0; i < k; ++i) out << ',', put(traj.noise[r](i));
    out << '\n';
  }
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(traj, out);
}

std::vector<double> lift_consistency_check(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                                           const Trajectory& traj) {
  detail::require(traj.size() >= 3, "lift_consistency_check: need at least 3 samples");
  detail::require(model.state_dim() == plant.state_dim(), "lift_consistency_check: model does not match plant");
  const MonomialBasis& basis = model.basis;
  const double h = traj.step();
  std::vector<double> sums(basis.order(), 0.0);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const Eigen::VectorXd psi = basis.lift(traj.states[i]);
    const Eigen::VectorXd rate = (basis.lift(traj.states[i + 1]) - basis.lift(traj.states[i - 1])) / (2.0 * h);
    const Eigen::VectorXd predicted = model.A * psi + eval_input_matrix(model, psi) * traj.inputs[i];
    const Eigen::VectorXd diff = rate - predicted;
    for (int d = 1; d <= basis.order(); ++d) {
      sums[d - 1] += diff.segment(basis.degree_offset(d), basis.block_size(d)).squaredNorm();
    }
  }
  const double count = static_cast<double>(traj.size() - 2);
  for (double& s : sums) s = std::sqrt(s / count);
  return sums;
}

PolynomialPlant oscillator_plant() {
  Eigen::MatrixXd a1(2, 2);
  a1 << 0, 1, -1, 0;
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(2, 3);  // (2,0) (1,1) (0,2)
  a2(1, 1) = 1.0;
  Eigen::MatrixXd a3 = Eigen::MatrixXd::Zero(2, 4);  // (3,0) (2,1) (1,2) (0,3)
  a3(1, 1) = 0.5;
  Eigen::MatrixXd b0(2, 1);
  b0 << 0, 1;
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(2, 2);
  b1(1, 0) = 1.0;
  return PolynomialPlant("oscillator", 2, 1, {a1, a2, a3}, b0, {{b1}});
}

double hjb_oscillator_control(const Eigen::VectorXd& x) {
  detail::require(x.size() == 2, "hjb_oscillator_control: state must have length 2");
  return -(1.0 + x(0)) * x(1);
}

}  // namespace carleman
