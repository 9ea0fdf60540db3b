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

#include "carleman/tugboat.hpp"

#include <cmath>
#include <map>

namespace carleman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TugboatParams tugboat_params() {
  TugboatParams p;
  p.M << 33.8, 1.0948, 0, 1.0948, 2.764, 0, 0, 0, 23.8;
  p.D << 7, 0.1, 0, 0.1, 0.5, 0, 0, 0, 2;
  p.targets = {{10, 10}, {10, -10}, {-10, -10}, {-10, 10}};
  return p;
}

namespace {

enum Slot { kX = 0, kY = 1, kTheta = 2, kV1 = 3, kV2 = 4, kV3 = 5 };

Exponent unit(int n, std::initializer_list<std::pair<int, int>> powers) {
  Exponent e(n, 0);
  for (auto [index, power] : powers) e[index] += power;
  return e;
}

}  // namespace

PolynomialPlant tugboat_plant(int boats, int order) {
  detail::require(boats >= 1, "tugboat_plant: need at least one boat");
  detail::require(order >= 1 && order <= 3, "tugboat_plant: order must be 1, 2 or 3");
  const TugboatParams params = tugboat_params();
  const int n = kTugboatStates * boats;
  const int k = kTugboatInputs * boats;
  const Eigen::Matrix3d Minv = params.M.inverse();
  const Eigen::Matrix3d damping = -Minv * params.D;

  std::vector<MatrixXd> taylor;
  std::vector<std::map<Exponent, int>> columns;
  for (int d = 1; d <= order; ++d) {
    const std::vector<Exponent> mons = degree_monomials(n, d);
    taylor.push_back(MatrixXd::Zero(n, static_cast<Eigen::Index>(mons.size())));
    std::map<Exponent, int> idx;
    for (std::size_t i = 0; i < mons.size(); ++i) idx.emplace(mons[i], static_cast<int>(i));
    columns.push_back(std::move(idx));
  }
  auto add = [&](int row, const Exponent& e, double c) {
    const int d = exponent_degree(e);
    taylor[d - 1](row, columns[d - 1].at(e)) += c;
  };

  MatrixXd input = MatrixXd::Zero(n, k);
  for (int j = 0; j < boats; ++j) {
    const int s = kTugboatStates * j;
    add(s + kX, unit(n, {{s + kV1, 1}}), 1.0);
    add(s + kY, unit(n, {{s + kV2, 1}}), 1.0);
    add(s + kTheta, unit(n, {{s + kV3, 1}}), 1.0);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (damping(a, b) != 0.0) add(s + kV1 + a, unit(n, {{s + kV1 + b, 1}}), damping(a, b));
      }
    }
    if (order >= 2) {
      add(s + kX, unit(n, {{s + kTheta, 1}, {s + kV2, 1}}), -1.0);
      add(s + kY, unit(n, {{s + kTheta, 1}, {s + kV1, 1}}), 1.0);
    }
    if (order >= 3) {
      add(s + kX, unit(n, {{s + kTheta, 2}, {s + kV1, 1}}), -0.5);
      add(s + kY, unit(n, {{s + kTheta, 2}, {s + kV2, 1}}), -0.5);
    }
    input.block(s + kV1, kTugboatInputs * j, 3, 3) = Minv;
  }

  PolynomialPlant plant("tugboat", n, k, std::move(taylor), input, {});
  plant.exact_drift = [boats, damping](const VectorXd& x) {
    VectorXd dx(x.size());
    for (int j = 0; j < boats; ++j) {
      const int s = kTugboatStates * j;
      const double c = std::cos(x(s + kTheta));
      const double sn = std::sin(x(s + kTheta));
      const Eigen::Vector3d v = x.segment<3>(s + kV1);
      dx(s + kX) = c * v(0) - sn * v(1);
      dx(s + kY) = sn * v(0) + c * v(1);
      dx(s + kTheta) = v(2);
      dx.segment<3>(s + kV1) = damping * v;
    }
    return dx;
  };
  plant.exact_input = [input](const VectorXd&) { return input; };

  VectorXd z_star = VectorXd::Zero(n);
  for (int j = 0; j < boats; ++j) {
    const Eigen::Vector2d target = params.targets[static_cast<std::size_t>(j) % params.targets.size()];
    z_star(kTugboatStates * j + kX) = target(0);
    z_star(kTugboatStates * j + kY) = target(1);
  }
  plant.z_star = z_star;
  return plant;
}

MonomialBasis tugboat_basis(int boats, int order) {
  detail::require(boats >= 1, "tugboat_basis: need at least one boat");
  detail::require(order >= 1 && order <= 3, "tugboat_basis: order must be 1, 2 or 3");
  const int n = kTugboatStates * boats;
  std::vector<Exponent> higher;
  for (int j = 0; j < boats; ++j) {
    const int s = kTugboatStates * j;
    if (order >= 2) {
      higher.push_back(unit(n, {{s + kTheta, 1}, {s + kV1, 1}}));
      higher.push_back(unit(n, {{s + kTheta, 1}, {s + kV2, 1}}));
    }
    if (order >= 3) {
      higher.push_back(unit(n, {{s + kTheta, 2}, {s + kV1, 1}}));
      higher.push_back(unit(n, {{s + kTheta, 2}, {s + kV2, 1}}));
    }
  }
  return restricted_basis(n, order, higher);
}

CostWeights tugboat_weights(int boats, double q_scale) {
  detail::require(boats >= 1, "tugboat_weights: need at least one boat");
  const int n = kTugboatStates * boats;
  MatrixXd Q = MatrixXd::Zero(n, n);
  for (int j = 0; j < boats; ++j) {
    const int s = kTugboatStates * j;
    for (int i = 0; i < 3; ++i) Q(s + i, s + i) = 5.0;
    for (int i = 3; i < 6; ++i) Q(s + i, s + i) = 1.0;
  }
  // sum_{k<j} (x_j - x_k)^2 is the complete-graph Laplacian on each axis.
  for (int a : {static_cast<int>(kX), static_cast<int>(kY)}) {
    for (int j = 0; j < boats; ++j) {
      for (int l = 0; l < boats; ++l) {
        Q(kTugboatStates * j + a, kTugboatStates * l + a) += (j == l) ? boats - 1.0 : -1.0;
      }
    }
  }
  return {q_scale * Q, MatrixXd::Identity(kTugboatInputs * boats, kTugboatInputs * boats)};
}

namespace {

double trapezoid(const Trajectory& traj, double horizon, const std::function<double(std::size_t)>& f) {
  detail::require(!traj.empty(), "tugboat cost: empty trajectory");
  const double t_end = traj.times.front() + horizon;
  detail::require(horizon >= 0.0 && t_end <= traj.times.back() + 1e-9, "tugboat cost: horizon exceeds trajectory");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size() && traj.times[i] < t_end - 1e-12; ++i) {
    total += 0.5 * (traj.times[i + 1] - traj.times[i]) * (f(i) + f(i + 1));
  }
  return total;
}

void require_square(const Trajectory& traj) {
  detail::require(!traj.empty() && traj.states.front().size() == 4 * kTugboatStates,
                  "tugboat cost is defined for the four-boat formation");
}

}  // namespace

double tugboat_cost(const Trajectory& traj, const CostWeights& weights, double horizon) {
  require_square(traj);
  return trapezoid(traj, horizon, [&](std::size_t i) {
    const VectorXd& x = traj.states[i];
    const VectorXd u = traj.policy_input(i);
    return x.dot(weights.Q1 * x) + u.dot(weights.R * u);
  });
}

double distance_objective(const Trajectory& traj, double horizon) {
  require_square(traj);
  return trapezoid(traj, horizon, [&](std::size_t i) {
    const VectorXd& x = traj.states[i];
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
      for (int j = k + 1; j < 4; ++j) {
        const double dx = x(kTugboatStates * j + kX) - x(kTugboatStates * k + kX);
        const double dy = x(kTugboatStates * j + kY) - x(kTugboatStates * k + kY);
        total += dx * dx + dy * dy;
      }
    }
    return total;
  });
}

VectorXd tugboat_state(const std::vector<Eigen::Vector3d>& poses, const TugboatParams& params) {
  detail::require(!poses.empty() && poses.size() <= params.targets.size(), "tugboat_state: bad boat count");
  VectorXd x = VectorXd::Zero(kTugboatStates * static_cast<Eigen::Index>(poses.size()));
  for (std::size_t j = 0; j < poses.size(); ++j) {
    const Eigen::Index s = kTugboatStates * static_cast<Eigen::Index>(j);
    x(s + kX) = poses[j](0) - params.targets[j](0);
    x(s + kY) = poses[j](1) - params.targets[j](1);
    x(s + kTheta) = poses[j](2);
  }
  return x;
}

std::vector<int> tugboat_owners(int boats) {
  std::vector<int> owners(static_cast<std::size_t>(kTugboatStates * boats));
  for (std::size_t s = 0; s < owners.size(); ++s) owners[s] = static_cast<int>(s) / kTugboatStates;
  return owners;
}

}  // namespace carleman
