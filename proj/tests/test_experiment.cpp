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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "carleman/experiment.hpp"
#include "carleman/lyapunov.hpp"
#include "oracles.hpp"

namespace carleman {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const fs::path kConfigs = CARLEMAN_CONFIG_DIR;

Json oscillator_json() {
  return Json::parse(R"({
    "schema_version": 1, "name": "osc", "plant": {"type": "oscillator"}, "truncation": 2,
    "mode": "on-policy",
    "learning": {"T": 2.0, "dt": 0.1, "sim_step": 0.01,
                 "excitation": {"kind": "sum-of-sinusoids", "amplitude": 0.1}},
    "initial_state": [0.8, 0.7], "horizon": 20.0, "seed": 7})");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("carleman_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config_error_path(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

TEST(Serialize, MatrixRoundTrip) {
  oracle::Rng rng(1);
  const MatrixXd M = rng.matrix(3, 4);
  EXPECT_EQ(matrix_from_json(matrix_to_json(M)), M);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1, 2], [3]]")), InvalidArgument);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1, \"a\"]]")), InvalidArgument);
  EXPECT_THROW(matrix_from_json(Json::parse("[]")), InvalidArgument);
}

TEST(Serialize, GainRoundTripChecksBasis) {
  const MonomialBasis basis = monomial_basis(2, 2);
  oracle::Rng rng(2);
  const FeedbackGain gain{rng.matrix(1, basis.size()), GainSource::sparse};
  const Json j = gain_to_json(gain, basis);
  const FeedbackGain back = gain_from_json(j, &basis);
  EXPECT_EQ(back.K, gain.K);
  EXPECT_EQ(back.source, GainSource::sparse);
  const MonomialBasis other = monomial_basis(2, 3);
  EXPECT_THROW(gain_from_json(j, &other), InvalidArgument);
}

TEST(Config, DefaultsAndEcho) {
  const ExperimentConfig c = parse_config(oscillator_json());
  EXPECT_EQ(c.truncation, 2);
  EXPECT_EQ(c.mode, ExperimentMode::on_policy);
  EXPECT_EQ(c.learning.noise.seed, 7u);
  const Json echo = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(echo)), echo);
  EXPECT_EQ(echo.at("weights").at("Q1"), Json::parse("[[0.0, 0.0], [0.0, 1.0]]"));
}

TEST(Config, BundledConfigsEchoRoundTrip) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const ExperimentConfig c = load_config(entry.path());
    const Json echo = config_to_json(c);
    EXPECT_EQ(config_to_json(parse_config(echo)), echo);
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(Config, UnknownKeysRejectedWithPath) {
  Json j = oscillator_json();
  j["colour"] = "red";
  EXPECT_EQ(config_error_path(j), "colour");
  j = oscillator_json();
  j["learning"]["excitation"]["phase"] = 1;
  EXPECT_EQ(config_error_path(j), "learning.excitation.phase");
  j = oscillator_json();
  j["plant"]["boats"] = 4;
  EXPECT_EQ(config_error_path(j), "plant.boats");
}

TEST(Config, SchemaViolationsNameTheField) {
  Json j = oscillator_json();
  j.erase("schema_version");
  EXPECT_EQ(config_error_path(j), "schema_version");
  j = oscillator_json();
  j["schema_version"] = 2;
  EXPECT_EQ(config_error_path(j), "schema_version");
  j = oscillator_json();
  j["truncation"] = "two";
  EXPECT_EQ(config_error_path(j), "truncation");
  j = oscillator_json();
  j["initial_state"] = {1.0, 2.0, 3.0};
  EXPECT_EQ(config_error_path(j), "initial_state");
  j = oscillator_json();
  j["mode"] = "gradient";
  EXPECT_EQ(config_error_path(j), "mode");
  j = oscillator_json();
  j["weights"] = {{"R", {{1.0, 0.0}}}};
  EXPECT_EQ(config_error_path(j), "weights.R");
  j = oscillator_json();
  j["learning"]["dt"] = 0.015;  // not a multiple of sim_step
  EXPECT_EQ(config_error_path(j), "learning");
  j = oscillator_json();
  j["poses"] = Json::array();
  EXPECT_EQ(config_error_path(j), "initial_state");
}

TEST(Config, TugboatRules) {
  const ExperimentConfig c = load_config(kConfigs / "tugboat_structured.json");
  EXPECT_EQ(c.poses.size(), 4u);
  ASSERT_EQ(c.removed_links.size(), 2u);
  Json j = config_to_json(c);
  j["plant"]["boats"] = 3;
  EXPECT_EQ(config_error_path(j), "plant.boats");
  j = config_to_json(c);
  j["structured"]["removed_links"] = {{1, 1}};
  EXPECT_EQ(config_error_path(j), "structured.removed_links[0]");
  j = config_to_json(c);
  j["mode"] = "hjb-baseline";
  EXPECT_EQ(config_error_path(j), "mode");
  j = config_to_json(c);
  j["truncation"] = 4;
  EXPECT_EQ(config_error_path(j), "truncation");
}

TEST(Experiment, OpenLoopHasNoLearningArtifacts) {
  const ExperimentConfig c = load_config(kConfigs / "oscillator_open_loop.json");
  const ExperimentResult r = run_experiment(c);
  EXPECT_EQ(r.status, RunStatus::ok);
  EXPECT_FALSE(r.gain.has_value());
  EXPECT_FALSE(r.log.has_value());
  for (const VectorXd& u : r.evaluation.inputs) EXPECT_EQ(u.norm(), 0.0);
  const fs::path dir = scratch("open_loop");
  write_bundle(r, dir);
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "result.json"));
  EXPECT_FALSE(fs::exists(dir / "gain.json"));
  EXPECT_FALSE(fs::exists(dir / "learning.csv"));
  const Json result = Json::parse(slurp(dir / "result.json"));
  EXPECT_EQ(result.at("tool_version"), tool_version());
  EXPECT_EQ(result.at("exit_code"), 0);
}

TEST(Experiment, EchoedConfigReproducesRun) {
  const ExperimentConfig c = parse_config(oscillator_json());
  const ExperimentResult a = run_experiment(c);
  const ExperimentResult b = run_experiment(parse_config(a.config));
  ASSERT_TRUE(a.evaluated && b.evaluated);
  EXPECT_EQ(a.J, b.J);
  ASSERT_TRUE(a.gain && b.gain);
  EXPECT_EQ(a.gain->K, b.gain->K);
}

TEST(Experiment, SameSeedSameBytes) {
  const ExperimentConfig c = parse_config(oscillator_json());
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  write_bundle(run_experiment(c), a);
  write_bundle(run_experiment(c), b);
  for (const char* f : {"trajectory.csv", "learning.csv", "gain.json", "result.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  Json j = oscillator_json();
  j["seed"] = 8;
  const fs::path d = scratch("det_d");
  write_bundle(run_experiment(parse_config(j)), d);
  EXPECT_NE(slurp(a / "learning.csv"), slurp(d / "learning.csv"));
}

// Exit 0 must never come with an unstable or non-contracting closed loop.
TEST(Experiment, ExitZeroImpliesStableClosedLoop) {
  oracle::Rng rng(2026);
  int ok = 0;
  int failed = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + trial % 2;
    Json j{{"schema_version", 1},
           {"name", "prop"},
           {"plant", {{"type", "linear"}, {"A", matrix_to_json(rng.matrix(n, n) * 1.5)},
                      {"B", matrix_to_json(rng.matrix(n, 1))}}},
           {"truncation", 1},
           {"weights", {{"q_scale", trial % 3 == 0 ? 1e-3 : 1.0}}},
           {"mode", trial % 2 == 0 ? "on-policy" : "model-based"},
           {"learning", {{"T", 1.0}, {"dt", 0.05}, {"sim_step", 0.01}, {"max_iters", 8},
                         {"excitation", {{"kind", "sum-of-sinusoids"}, {"amplitude", 0.3}}}}},
           {"initial_state", vector_to_json(VectorXd::Ones(n))},
           {"horizon", 15.0},
           {"seed", trial}};
    const ExperimentResult r = run_experiment(parse_config(j));
    SCOPED_TRACE("trial " + std::to_string(trial) + ": " + r.message);
    if (r.exit_code() == 0) {
      ++ok;
      ASSERT_TRUE(r.linear_abscissa.has_value());
      EXPECT_LT(*r.linear_abscissa, 0.0);
      EXPECT_TRUE(r.evaluated);
      EXPECT_LT(r.final_state_norm, std::sqrt(static_cast<double>(n)));
    } else {
      ++failed;
      EXPECT_TRUE(r.exit_code() == 3 || r.exit_code() == 4);
      EXPECT_FALSE(r.message.empty());
    }
  }
  EXPECT_GT(ok, 0);
}

TEST(Experiment, ScaledDownQIsNotSilent) {
  const ExperimentResult r = run_experiment(load_config(kConfigs / "oscillator_q_scaled.json"));
  EXPECT_NE(r.exit_code(), 0);
  EXPECT_FALSE(r.message.empty());
}

TEST(Compare, IdenticalBundlesGiveZeroGap) {
  const ExperimentResult r = run_experiment(load_config(kConfigs / "oscillator_table1_small_n1.json"));
  const Json doc = result_to_json(r);
  const auto rows = compare_runs({doc, doc});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) EXPECT_EQ(row.gap, 0.0);
}

TEST(Compare, GapAgainstBaselineAndMismatch) {
  std::vector<Json> docs;
  for (const char* name : {"oscillator_table1_large_n1", "oscillator_table1_large_hjb"}) {
    docs.push_back(result_to_json(run_experiment(load_config(kConfigs / (std::string(name) + ".json")))));
  }
  const auto rows = compare_runs(docs);
  EXPECT_EQ(rows[1].gap, 0.0);  // the hjb-baseline run is the default reference
  EXPECT_NEAR(rows[0].gap, (rows[0].J - rows[1].J) / rows[1].J, 1e-15);
  EXPECT_THROW(compare_runs(docs, "missing"), InvalidArgument);
  Json other = docs[0];
  other["horizon"] = 10.0;
  EXPECT_THROW(compare_runs({docs[1], other}), InvalidArgument);
  EXPECT_NE(comparison_csv(rows).find("name,mode,truncation,status,J,gap,iterations,timesteps"), std::string::npos);
}

TEST(Sweep, WritesOneRowPerValue) {
  const fs::path dir = scratch("sweep");
  const Json base = oscillator_json();
  const auto rows = sweep(base, "weights.q_scale", {1.0, 0.001}, dir, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, RunStatus::ok);
  EXPECT_NE(rows[1].status, RunStatus::ok);
  const Json doc = Json::parse(slurp(dir / "sweep.json"));
  EXPECT_EQ(doc.at("last_ok_value"), 1.0);
  EXPECT_TRUE(fs::exists(dir / "run_1" / "result.json"));
  EXPECT_THROW(sweep(base, "weights.q_scale", {-1.0}, dir), ConfigError);
}

int cli(const std::string& args) {
  const int status = std::system((std::string(CARLEMAN_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(cli("run " + (kConfigs / "oscillator_open_loop.json").string() + " -o " + (dir / "a").string()), 0);
  EXPECT_EQ(cli("run " + (kConfigs / "oscillator_q_scaled.json").string() + " -o " + (dir / "b").string()), 3);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("run"), 2);
  fs::create_directories(dir);
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"schema_version": 1, "plant": {"type": "oscillator"}, "initial_state": [0, 0], "extra": 1})";
  }
  EXPECT_EQ(cli("run " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(cli("compare " + (dir / "a").string() + " " + (dir / "a").string()), 0);
}

}  // namespace
}  // namespace carleman
