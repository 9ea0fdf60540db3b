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

#include "carleman/serialize.hpp"

#include <string>
#include <vector>

namespace carleman {

using Eigen::MatrixXd;

Json matrix_to_json(const MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j) {
  detail::require(j.is_array() && !j.empty(), "matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  detail::require(j[0].is_array() && !j[0].empty(), "matrix rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    detail::require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      detail::require(v.is_number(), "matrix entries must be numbers");
      M(r, c) = v.get<double>();
    }
  }
  return M;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json basis_to_json(const MonomialBasis& basis) {
  Json exps = Json::array();
  for (const Exponent& e : basis.exponents()) exps.push_back(e);
  return Json{{"state_dim", basis.state_dim()}, {"order", basis.order()}, {"exponents", std::move(exps)}};
}

MonomialBasis basis_from_json(const Json& j) {
  detail::require(j.is_object() && j.contains("state_dim") && j.contains("order") && j.contains("exponents"),
                  "basis needs state_dim, order and exponents");
  const int n = j.at("state_dim").get<int>();
  const int order = j.at("order").get<int>();
  std::vector<Exponent> higher;
  for (const Json& e : j.at("exponents")) {
    Exponent exp = e.get<Exponent>();
    if (exponent_degree(exp) > 1) higher.push_back(std::move(exp));
  }
  MonomialBasis basis = restricted_basis(n, order, higher);
  detail::require(basis_to_json(basis).at("exponents") == j.at("exponents"), "basis exponents are not in graded order");
  return basis;
}

GainSource gain_source_from_string(const std::string& name) {
  for (GainSource s : {GainSource::learned, GainSource::structured, GainSource::sparse, GainSource::initial}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown gain source '" + name + "'");
}

Json gain_to_json(const FeedbackGain& gain, const MonomialBasis& basis) {
  detail::require(gain.K.cols() == basis.size(), "gain does not conform to the basis");
  return Json{{"source", to_string(gain.source)},
              {"rows", gain.K.rows()},
              {"cols", gain.K.cols()},
              {"K", matrix_to_json(gain.K)},
              {"basis", basis_to_json(basis)}};
}

FeedbackGain gain_from_json(const Json& j, const MonomialBasis* expected_basis) {
  detail::require(j.is_object() && j.contains("K") && j.contains("basis") && j.contains("source"),
                  "gain needs source, K and basis");
  FeedbackGain gain{matrix_from_json(j.at("K")), gain_source_from_string(j.at("source").get<std::string>())};
  const MonomialBasis basis = basis_from_json(j.at("basis"));
  detail::require(gain.K.cols() == basis.size(), "gain columns do not match its basis");
  if (expected_basis) detail::require(basis == *expected_basis, "gain was computed for a different basis");
  return gain;
}

Json log_to_json(const LearningLog& log) {
  Json iterations = Json::array();
  for (std::size_t i = 0; i < log.snapshots.size(); ++i) {
    Json it{{"iter", i}};
    it["delta_p"] = i >= 1 && i - 1 < log.delta_p.size() ? Json(log.delta_p[i - 1]) : Json(nullptr);
    it["residual"] = i < log.residuals.size() ? Json(log.residuals[i]) : Json(nullptr);
    it["condition"] = i < log.conditions.size() ? Json(log.conditions[i]) : Json(nullptr);
    iterations.push_back(std::move(it));
  }
  return Json{{"iterations", log.iterations()},
              {"converged", log.converged},
              {"timesteps", log.timesteps},
              {"learning_time", log.learning_time},
              {"history", std::move(iterations)}};
}

Json model_to_json(const CarlemanModel<double>& model) {
  Json input_state = Json::array();
  for (const MatrixXd& Bs : model.input_state) input_state.push_back(matrix_to_json(Bs));
  return Json{{"basis", basis_to_json(model.basis)},
              {"A", matrix_to_json(model.A)},
              {"B0", matrix_to_json(model.B0)},
              {"input_state", std::move(input_state)}};
}

}  // namespace carleman
