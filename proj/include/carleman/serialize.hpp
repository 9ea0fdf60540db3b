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

#include <json.hpp>

#include "carleman/policy_iteration.hpp"

namespace carleman {

using Json = nlohmann::ordered_json;

/// Row-major nested arrays.
Json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);

/// {"state_dim", "order", "exponents": [[...], ...]}.
Json basis_to_json(const MonomialBasis& basis);
MonomialBasis basis_from_json(const Json& j);

/// Self-describing gain: shape, source, K and the basis its columns follow.
Json gain_to_json(const FeedbackGain& gain, const MonomialBasis& basis);
FeedbackGain gain_from_json(const Json& j, const MonomialBasis* expected_basis = nullptr);

GainSource gain_source_from_string(const std::string& name);

/// Per-iteration array with ||dP||, residual and condition number, plus the
/// run totals.
Json log_to_json(const LearningLog& log);

Json model_to_json(const CarlemanModel<double>& model);

}  // namespace carleman
