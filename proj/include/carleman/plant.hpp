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
#include <iosfwd>
#include <string>
#include <vector>

#include "carleman/carleman_model.hpp"

namespace carleman {

/// Input-affine polynomial plant dx/dt = f(x) + g(x) u in deviation
/// coordinates. `taylor[j-1]` holds the degree-j drift coefficients and
/// `input_state[i][l-1]` the degree-l part of input column i; both use the
/// column ordering of degree_monomials().
///
/// The optional exact_drift / exact_input hooks replace the polynomial
/// evaluation during simulation. They let the simulator run the true
/// nonlinear system while the coefficients describe only the learner's
/// approximation of it.
class PolynomialPlant {
 public:
  PolynomialPlant(std::string name, int n, int k, std::vector<Eigen::MatrixXd> taylor, Eigen::MatrixXd input_const,
                  std::vector<std::vector<Eigen::MatrixXd>> input_state);

  const std::string& name() const noexcept { return name_; }
  int state_dim() const noexcept { return n_; }
  int input_dim() const noexcept { return k_; }
  const std::vector<Eigen::MatrixXd>& taylor() const noexcept { return taylor_; }
  const Eigen::MatrixXd& input_const() const noexcept { return input_const_; }
  const std::vector<std::vector<Eigen::MatrixXd>>& input_state() const noexcept { return input_state_; }
  int drift_degree() const noexcept { return static_cast<int>(taylor_.size()); }

  Eigen::VectorXd z_star;
  Eigen::VectorXd w_star;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> exact_drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> exact_input;

  /// Polynomial drift (ignores exact_drift).
  Eigen::VectorXd poly_drift(const Eigen::VectorXd& x) const;
  /// Polynomial input matrix g(x), n x k (ignores exact_input).
  Eigen::MatrixXd poly_input(const Eigen::VectorXd& x) const;

  /// Right-hand side used by the simulator.
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

 private:
  std::string name_;
  int n_;
  int k_;
  std::vector<Eigen::MatrixXd> taylor_;
  Eigen::MatrixXd input_const_;
  std::vector<std::vector<Eigen::MatrixXd>> input_state_;
  PolyVector<double> drift_poly_;
  std::vector<PolyVector<double>> input_poly_;
};

Eigen::VectorXd drift(const PolynomialPlant& plant, const Eigen::VectorXd& x);
Eigen::MatrixXd input_matrix(const PolynomialPlant& plant, const Eigen::VectorXd& x);

/// Truncated Carleman model of the plant's polynomial coefficients.
CarlemanModel<double> carleman_model(const PolynomialPlant& plant, const MonomialBasis& basis);

struct CostWeights {
  Eigen::MatrixXd Q1;
  Eigen::MatrixXd R;

  /// Throws InvalidArgument unless Q1 is symmetric PSD and R symmetric PD.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // controller output plus noise
  std::vector<Eigen::VectorXd> noise;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  Eigen::VectorXd policy_input(std::size_t i) const { return inputs[i] - noise[i]; }
  /// Appends `other`, dropping its first sample when it repeats our last.
  void append(const Trajectory& other);
};

using Controller = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;
using NoiseSignal = std::function<Eigen::VectorXd(double t)>;

enum class ControlHold { continuous, zero_order };

struct SimOptions {
  double step = 0.01;
  ControlHold hold = ControlHold::continuous;
  double divergence_bound = 1e6;
};

/// Classical RK4 over [t0, t0 + duration]. With ControlHold::continuous the
/// controller is evaluated at every Runge-Kutta stage; zero_order freezes it
/// for the whole step. Noise is always evaluated at the stage times.
Trajectory integrate(const PolynomialPlant& plant, const Controller& controller, const Eigen::VectorXd& x0,
                     double t0, double duration, const NoiseSignal& noise = {}, const SimOptions& options = {});

/// (1/2) * integral of x'Q1x + u'Ru over [t_first, t_first + horizon] by the
/// trapezoidal rule, with u the policy part of the applied input.
double cost_functional(const Trajectory& traj, const CostWeights& weights, double horizon);

void write_csv(const Trajectory& traj, std::ostream& out);
void write_csv(const Trajectory& traj, const std::string& path);

/// Per-degree RMS of the central-difference residual
/// d/dt lift(x) - (A lift(x) + B(lift(x)) u) along a sampled trajectory.
std::vector<double> lift_consistency_check(const PolynomialPlant& plant, const CarlemanModel<double>& model,
                                           const Trajectory& traj);

PolynomialPlant oscillator_plant();
double hjb_oscillator_control(const Eigen::VectorXd& x);

}  // namespace carleman
