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

#include <vector>

#include "carleman/plant.hpp"

namespace carleman {

// Planar tugboats: per boat the state is (x, y, theta, v1, v2, v3) measured
// from the boat's target pose, with kinematics eta' = R(theta) v and surge /
// sway / yaw dynamics M v' + D v = tau.

struct TugboatParams {
  Eigen::Matrix3d M;
  Eigen::Matrix3d D;
  std::vector<Eigen::Vector2d> targets;
};

/// Square formation around the origin with the standard hull matrices.
TugboatParams tugboat_params();

constexpr int kTugboatStates = 6;
constexpr int kTugboatInputs = 3;

/// Plant whose polynomial coefficients carry R(theta) truncated at `order`
/// (1: identity, 2: adds the +-theta terms, 3: adds -theta^2/2 on the
/// diagonal). Simulation always uses exact sin / cos.
PolynomialPlant tugboat_plant(int boats, int order);

/// Linear states plus the theta * v1, theta * v2 (order >= 2) and
/// theta^2 * v1, theta^2 * v2 (order 3) monomials of each boat.
MonomialBasis tugboat_basis(int boats, int order);

/// 5 on position and yaw, 1 on velocities, plus the pairwise position
/// differences between boats; R is the identity.
CostWeights tugboat_weights(int boats, double q_scale = 1.0);

/// Integral of x'Q1x + u'u over the horizon (no factor 1/2), with the policy
/// part of the input. Requires the four-boat scenario.
double tugboat_cost(const Trajectory& traj, const CostWeights& weights, double horizon);

/// Integral of the pairwise position-difference term alone.
double distance_objective(const Trajectory& traj, double horizon);

/// Deviation state from absolute poses: rows (X, Y, theta) per boat, zero
/// velocities.
Eigen::VectorXd tugboat_state(const std::vector<Eigen::Vector3d>& poses, const TugboatParams& params);

/// Agent owning each state coordinate.
std::vector<int> tugboat_owners(int boats);

}  // namespace carleman
