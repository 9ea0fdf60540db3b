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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carleman/serialize.hpp"
#include "carleman/sparse.hpp"
#include "carleman/structured.hpp"

namespace carleman {

constexpr int kSchemaVersion = 1;
std::string tool_version();

/// Schema violation; the message starts with the offending field path.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& path, const std::string& what) : InvalidArgument(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class ExperimentMode { on_policy, off_policy, model_based, structured, sparse, hjb_baseline, open_loop };
std::string to_string(ExperimentMode mode);
ExperimentMode experiment_mode_from_string(const std::string& name);

enum class PlantKind { oscillator, tugboat, linear, polynomial };
std::string to_string(PlantKind kind);

struct PlantSpec {
  PlantKind kind = PlantKind::oscillator;
  int boats = 4;  // tugboat
  Eigen::MatrixXd A;  // linear
  Eigen::MatrixXd B;  // linear; constant input matrix of a polynomial plant
  std::vector<Eigen::MatrixXd> taylor;                   // polynomial
  std::vector<std::vector<Eigen::MatrixXd>> input_state;  // polynomial
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name = "experiment";
  PlantSpec plant;
  int truncation = 1;
  std::optional<Eigen::MatrixXd> Q1;  // defaults depend on the plant
  std::optional<Eigen::MatrixXd> R;
  double q_scale = 1.0;
  ExperimentMode mode = ExperimentMode::on_policy;
  LearningConfig learning;
  bool require_convergence = false;
  bool behavior_initial = false;  // off-policy excitation actuates K0 instead of zero
  LearningMode structured_evaluation = LearningMode::model_based;
  StructuredConfig structured;
  std::vector<std::pair<int, int>> removed_links;  // 1-based agent pairs
  std::optional<Eigen::MatrixXd> mask;             // explicit mask for single-agent plants
  LearningMode sparse_evaluation = LearningMode::model_based;
  AdmmConfig admm;
  int link_capacity = 0;
  Eigen::VectorXd initial_state;              // deviation coordinates
  std::vector<Eigen::Vector3d> poses;         // tugboat alternative to initial_state
  std::optional<Eigen::VectorXd> learning_state;  // defaults to the initial state
  double horizon = 20.0;
  double eval_step = 0.0;  // 0: the learning integration step
  std::string output_dir;
  std::uint64_t seed = 1;
};

/// Validates against the versioned schema; unknown keys and type errors throw
/// ConfigError naming the field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Normalized echo with every default filled in; parse_config(config_to_json(c))
/// reproduces c.
Json config_to_json(const ExperimentConfig& config);

/// Plant, basis, weights and scoring for a config.
struct Scenario {
  PolynomialPlant plant;
  MonomialBasis basis;
  CostWeights weights;
  std::function<double(const Trajectory&, double)> cost;
  std::vector<int> state_owner;  // empty for single-agent plants
  std::vector<int> input_owner;
  Eigen::VectorXd x0;
};
Scenario make_scenario(const ExperimentConfig& config);

enum class RunStatus { ok, diverged, infeasible };
std::string to_string(RunStatus status);
int exit_code(RunStatus status);

struct ExperimentResult {
  Json config;  // normalized echo
  RunStatus status = RunStatus::ok;
  std::string message;
  double J = 0.0;
  bool evaluated = false;
  double final_state_norm = 0.0;
  std::optional<double> linear_abscissa;  // closed-loop linear block
  std::optional<MonomialBasis> basis;
  std::optional<FeedbackGain> gain;
  std::optional<LearningLog> log;
  Trajectory learning;    // empty when nothing was learned from data
  Trajectory evaluation;  // noise-free closed loop from the initial state
  Json extras = Json::object();

  int exit_code() const { return carleman::exit_code(status); }
};

/// Dispatches to the module selected by config.mode. Runtime failures
/// (divergence, infeasibility, ill-conditioned data) are captured in the
/// status; a run whose evaluated closed loop does not contract is reported
/// as diverged.
ExperimentResult run_experiment(const ExperimentConfig& config);

Json result_to_json(const ExperimentResult& result);

/// Writes config.json, result.json, trajectory.csv and, when present,
/// learning.csv and gain.json into `dir`.
void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir);

struct ComparisonRow {
  std::string name;
  std::string mode;
  int truncation = 0;
  std::string status;
  double J = 0.0;
  double gap = 0.0;  // (J - J_ref) / |J_ref|
  int iterations = 0;
  long timesteps = 0;
};

/// Aligns result.json documents that share plant and horizon. The reference
/// is the bundle named `reference`, else the first hjb-baseline, else the
/// first bundle.
std::vector<ComparisonRow> compare_runs(const std::vector<Json>& results, const std::string& reference = "");
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
Json comparison_json(const std::vector<ComparisonRow>& rows);

struct SweepRow {
  Json value;
  RunStatus status = RunStatus::ok;
  double J = 0.0;
  bool evaluated = false;
  int bandwidth = -1;
  int cardinality = -1;
  std::string bundle;
};

/// Runs the config once per value of the dotted parameter path (for example
/// "sparse.gamma"), writing one bundle per value under `dir`, plus sweep.csv
/// and sweep.json.
std::vector<SweepRow> sweep(const Json& base, const std::string& param, const std::vector<Json>& values,
                            const std::filesystem::path& dir, int jobs = 1);

/// %.12g, or "nan".
std::string format_number(double v);

}  // namespace carleman
