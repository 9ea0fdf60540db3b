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

// Command-line experiment runner: run, compare and sweep.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "carleman/experiment.hpp"

namespace fs = std::filesystem;
using carleman::Json;

namespace {

constexpr int kUsage = 2;

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw carleman::ConfigError(path.string(), "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw carleman::ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw carleman::InvalidArgument("cannot write " + path.string());
  out << text;
}

struct RunArgs {
  std::vector<std::string> configs;
  std::string output;
  std::optional<long long> seed;
  std::string mode;
  int jobs = 1;
};

struct Job {
  carleman::ExperimentConfig config;
  fs::path dir;
};

int run_one(const Job& job) {
  const carleman::ExperimentResult r = carleman::run_experiment(job.config);
  carleman::write_bundle(r, job.dir);
  std::string line = job.config.name + ": " + carleman::to_string(r.status);
  if (r.evaluated) line += " J=" + carleman::format_number(r.J);
  if (!r.message.empty()) line += " (" + r.message + ")";
  line += " -> " + job.dir.string() + "\n";
  std::cout << line << std::flush;
  return r.exit_code();
}

int cmd_run(const RunArgs& args) {
  // Every config is validated before any run starts.
  std::vector<Job> jobs;
  for (const std::string& path : args.configs) {
    Json j = read_json(path);
    if (args.seed) j["seed"] = *args.seed;
    if (!args.mode.empty()) j["mode"] = args.mode;
    carleman::ExperimentConfig c = carleman::parse_config(j);
    fs::path dir;
    if (!args.output.empty()) {
      dir = args.configs.size() == 1 ? fs::path(args.output) : fs::path(args.output) / c.name;
    } else if (!c.output_dir.empty()) {
      dir = c.output_dir;
    } else {
      dir = fs::path("results") / c.name;
    }
    jobs.push_back({std::move(c), std::move(dir)});
  }
  for (std::size_t a = 0; a < jobs.size(); ++a) {
    for (std::size_t b = a + 1; b < jobs.size(); ++b) {
      if (fs::weakly_canonical(jobs[a].dir) == fs::weakly_canonical(jobs[b].dir)) {
        throw carleman::ConfigError("output_dir", "runs '" + jobs[a].config.name + "' and '" + jobs[b].config.name +
                                                      "' would share " + jobs[a].dir.string());
      }
    }
  }
  int worst = 0;
  const std::size_t width = static_cast<std::size_t>(std::max(1, args.jobs));
  for (std::size_t start = 0; start < jobs.size(); start += width) {
    std::vector<std::future<int>> batch;
    for (std::size_t i = start; i < std::min(jobs.size(), start + width); ++i) {
      batch.push_back(std::async(std::launch::async, run_one, std::cref(jobs[i])));
    }
    for (auto& f : batch) worst = std::max(worst, f.get());
  }
  return worst;
}

int cmd_compare(const std::vector<std::string>& bundles, const std::string& reference, const std::string& output) {
  std::vector<Json> results;
  for (const std::string& b : bundles) {
    const fs::path p = fs::is_directory(b) ? fs::path(b) / "result.json" : fs::path(b);
    results.push_back(read_json(p));
  }
  const auto rows = carleman::compare_runs(results, reference);
  const std::string csv = carleman::comparison_csv(rows);
  std::cout << csv;
  if (!output.empty()) {
    write_file(fs::path(output) / "comparison.csv", csv);
    write_file(fs::path(output) / "comparison.json", carleman::comparison_json(rows).dump(2) + "\n");
  }
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::vector<std::string>& raw,
              const std::string& output, int jobs) {
  const Json base = read_json(config);
  std::vector<Json> values;
  for (const std::string& v : raw) {
    // Numbers and JSON literals parse as such; anything else is a string.
    values.push_back(Json::accept(v) ? Json::parse(v) : Json(v));
  }
  const fs::path dir = output.empty() ? fs::path("results") / (base.value("name", "sweep") + "_sweep") : fs::path(output);
  const auto rows = carleman::sweep(base, param, values, dir, jobs);
  std::ifstream in(dir / "sweep.csv");
  std::cout << in.rdbuf();
  int worst = 0;
  for (const auto& r : rows) worst = std::max(worst, carleman::exit_code(r.status));
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carleman-lifted policy iteration experiments"};
  app.set_version_flag("--version", carleman::tool_version());
  app.require_subcommand(1);

  RunArgs run;
  long long seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run one or more experiment configs");
  run_cmd->add_option("config", run.configs, "Config files")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", run.output, "Bundle directory (parent directory for several configs)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--mode", run.mode, "Override the config mode");
  run_cmd->add_option("-j,--jobs", run.jobs, "Configs run concurrently")->check(CLI::PositiveNumber);

  std::vector<std::string> bundles;
  std::string reference;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate J and gaps across result bundles");
  compare_cmd->add_option("bundle", bundles, "Bundle directories or result.json files")->required();
  compare_cmd->add_option("--reference", reference, "Name of the reference run");
  compare_cmd->add_option("-o,--output", compare_out, "Directory for comparison.csv and comparison.json");

  std::string sweep_config;
  std::string param;
  std::vector<std::string> values;
  std::string sweep_out;
  int sweep_jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config over values of one parameter");
  sweep_cmd->add_option("config", sweep_config, "Base config")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--param", param, "Dotted parameter path, for example sparse.gamma")->required();
  sweep_cmd->add_option("--values", values, "Values to substitute")->required();
  sweep_cmd->add_option("-o,--output", sweep_out, "Sweep directory");
  sweep_cmd->add_option("-j,--jobs", sweep_jobs, "Runs executed concurrently")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run_cmd) {
      if (*seed_opt) run.seed = seed;
      return cmd_run(run);
    }
    if (*compare_cmd) return cmd_compare(bundles, reference, compare_out);
    return cmd_sweep(sweep_config, param, values, sweep_out, sweep_jobs);
  } catch (const carleman::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const carleman::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
