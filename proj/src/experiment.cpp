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

#include "carleman/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <sstream>

#include "carleman/lyapunov.hpp"
#include "carleman/tugboat.hpp"

#ifndef CARLEMAN_VERSION
#define CARLEMAN_VERSION "0.0.0"
#endif

namespace carleman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string tool_version() { return CARLEMAN_VERSION; }

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Typed view of one JSON object that remembers which keys were read, so
/// leftovers can be rejected as unknown.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  const Json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(path(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "expected a finite number");
    return d;
  }

  long long integer(const std::string& key, long long fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }

  MatrixXd matrix(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(path(key), "missing");
    try {
      return matrix_from_json(*v);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  VectorXd vector(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(path(key), "missing");
    if (!v->is_array() || v->empty()) throw ConfigError(path(key), "expected a non-empty array of numbers");
    VectorXd out(static_cast<Eigen::Index>(v->size()));
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out(static_cast<Eigen::Index>(i)) = (*v)[i].get<double>();
    }
    return out;
  }

  Section child(const std::string& key) {
    static const Json empty = Json::object();
    const Json* v = find(key);
    return Section(v ? *v : empty, path(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError(path(item.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename T>
T check(T value, bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
  return value;
}

PlantKind plant_kind_from_string(const std::string& name, const std::string& path) {
  for (PlantKind k : {PlantKind::oscillator, PlantKind::tugboat, PlantKind::linear, PlantKind::polynomial}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError(path, "unknown plant type '" + name + "'");
}

int plant_state_dim(const PlantSpec& p) {
  switch (p.kind) {
    case PlantKind::oscillator:
      return 2;
    case PlantKind::tugboat:
      return kTugboatStates * p.boats;
    case PlantKind::linear:
      return static_cast<int>(p.A.rows());
    case PlantKind::polynomial:
      return static_cast<int>(p.B.rows());
  }
  return 0;
}

int plant_input_dim(const PlantSpec& p) {
  switch (p.kind) {
    case PlantKind::oscillator:
      return 1;
    case PlantKind::tugboat:
      return kTugboatInputs * p.boats;
    case PlantKind::linear:
    case PlantKind::polynomial:
      return static_cast<int>(p.B.cols());
  }
  return 0;
}

PlantSpec parse_plant(Section s) {
  PlantSpec p;
  p.kind = plant_kind_from_string(s.string("type", "oscillator"), s.path("type"));
  switch (p.kind) {
    case PlantKind::oscillator:
      break;
    case PlantKind::tugboat:
      p.boats = static_cast<int>(s.integer("boats", 4));
      check(0, p.boats == 4, s.path("boats"), "the formation scenario has exactly 4 boats");
      break;
    case PlantKind::linear:
      p.A = s.matrix("A");
      p.B = s.matrix("B");
      check(0, p.A.rows() == p.A.cols(), s.path("A"), "must be square");
      check(0, p.B.rows() == p.A.rows(), s.path("B"), "must have as many rows as A");
      break;
    case PlantKind::polynomial: {
      p.B = s.matrix("input_const");
      const int n = static_cast<int>(p.B.rows());
      const Json* taylor = s.find("taylor");
      check(0, taylor && taylor->is_array() && !taylor->empty(), s.path("taylor"),
            "expected a non-empty array of coefficient matrices");
      for (std::size_t j = 0; j < taylor->size(); ++j) {
        const std::string path = s.path("taylor") + "[" + std::to_string(j) + "]";
        try {
          p.taylor.push_back(matrix_from_json((*taylor)[j]));
        } catch (const InvalidArgument& e) {
          throw ConfigError(path, e.what());
        }
        const auto cols = static_cast<Eigen::Index>(degree_monomials(n, static_cast<int>(j) + 1).size());
        check(0, p.taylor.back().rows() == n && p.taylor.back().cols() == cols, path,
              "degree-" + std::to_string(j + 1) + " coefficients must be " + std::to_string(n) + " x " +
                  std::to_string(cols));
      }
      if (const Json* is = s.find("input_state")) {
        check(0, is->is_array() && static_cast<Eigen::Index>(is->size()) == p.B.cols(), s.path("input_state"),
              "expected one list of coefficient matrices per input");
        for (std::size_t i = 0; i < is->size(); ++i) {
          std::vector<MatrixXd> channel;
          for (std::size_t l = 0; l < (*is)[i].size(); ++l) {
            const std::string path = s.path("input_state") + "[" + std::to_string(i) + "][" + std::to_string(l) + "]";
            try {
              channel.push_back(matrix_from_json((*is)[i][l]));
            } catch (const InvalidArgument& e) {
              throw ConfigError(path, e.what());
            }
            const auto cols = static_cast<Eigen::Index>(degree_monomials(n, static_cast<int>(l) + 1).size());
            check(0, channel.back().rows() == n && channel.back().cols() == cols, path, "wrong shape");
          }
          p.input_state.push_back(std::move(channel));
        }
      }
      break;
    }
  }
  s.finish();
  return p;
}

Json plant_to_json(const PlantSpec& p) {
  Json j{{"type", to_string(p.kind)}};
  switch (p.kind) {
    case PlantKind::oscillator:
      break;
    case PlantKind::tugboat:
      j["boats"] = p.boats;
      break;
    case PlantKind::linear:
      j["A"] = matrix_to_json(p.A);
      j["B"] = matrix_to_json(p.B);
      break;
    case PlantKind::polynomial: {
      j["input_const"] = matrix_to_json(p.B);
      Json taylor = Json::array();
      for (const MatrixXd& t : p.taylor) taylor.push_back(matrix_to_json(t));
      j["taylor"] = std::move(taylor);
      if (!p.input_state.empty()) {
        Json is = Json::array();
        for (const auto& channel : p.input_state) {
          Json c = Json::array();
          for (const MatrixXd& m : channel) c.push_back(matrix_to_json(m));
          is.push_back(std::move(c));
        }
        j["input_state"] = std::move(is);
      }
      break;
    }
  }
  return j;
}

PolynomialPlant build_plant(const PlantSpec& p, int truncation) {
  switch (p.kind) {
    case PlantKind::oscillator:
      return oscillator_plant();
    case PlantKind::tugboat:
      return tugboat_plant(p.boats, truncation);
    case PlantKind::linear:
      return PolynomialPlant("linear", static_cast<int>(p.A.rows()), static_cast<int>(p.B.cols()), {p.A}, p.B, {});
    case PlantKind::polynomial:
      return PolynomialPlant("polynomial", static_cast<int>(p.B.rows()), static_cast<int>(p.B.cols()), p.taylor, p.B,
                             p.input_state);
  }
  throw InvalidArgument("unknown plant");
}

CostWeights default_weights(const PlantSpec& p) {
  const int n = plant_state_dim(p);
  const int k = plant_input_dim(p);
  switch (p.kind) {
    case PlantKind::oscillator: {
      CostWeights w{MatrixXd::Zero(2, 2), MatrixXd::Ones(1, 1)};
      w.Q1(1, 1) = 1.0;
      return w;
    }
    case PlantKind::tugboat:
      return tugboat_weights(p.boats);
    case PlantKind::linear:
    case PlantKind::polynomial:
      return {MatrixXd::Identity(n, n), MatrixXd::Identity(k, k)};
  }
  return {};
}

CostWeights resolve_weights(const ExperimentConfig& c) {
  CostWeights w = default_weights(c.plant);
  if (c.Q1) w.Q1 = *c.Q1;
  if (c.R) w.R = *c.R;
  w.Q1 *= c.q_scale;
  return w;
}

ControlHold hold_from_string(const std::string& name, const std::string& path) {
  if (name == "continuous") return ControlHold::continuous;
  if (name == "zero-order") return ControlHold::zero_order;
  throw ConfigError(path, "unknown hold '" + name + "' (continuous or zero-order)");
}

std::string to_string(ControlHold hold) { return hold == ControlHold::continuous ? "continuous" : "zero-order"; }

LearningMode evaluation_from(Section& s) {
  const std::string name = s.string("evaluation", "model-based");
  try {
    return learning_mode_from_string(name);
  } catch (const InvalidArgument&) {
    throw ConfigError(s.path("evaluation"), "unknown evaluation '" + name + "'");
  }
}

void parse_learning(Section s, ExperimentConfig& c) {
  LearningConfig& l = c.learning;
  l.T = s.number("T", l.T);
  l.dt = s.number("dt", l.dt);
  l.sim_step = s.number("sim_step", l.sim_step);
  l.hold = hold_from_string(s.string("hold", "continuous"), s.path("hold"));
  l.max_iters = static_cast<int>(s.integer("max_iters", l.max_iters));
  l.eps = s.number("eps", l.eps);
  l.ridge = s.number("ridge", l.ridge);
  c.require_convergence = s.boolean("require_convergence", false);
  const std::string behavior = s.string("behavior", "zero");
  check(0, behavior == "zero" || behavior == "initial", s.path("behavior"), "expected 'zero' or 'initial'");
  c.behavior_initial = behavior == "initial";
  Section e = s.child("excitation");
  NoiseSpec& n = l.noise;
  try {
    n.kind = noise_kind_from_string(e.string("kind", "none"));
  } catch (const InvalidArgument& err) {
    throw ConfigError(e.path("kind"), err.what());
  }
  n.amplitude = e.number("amplitude", n.amplitude);
  n.components = static_cast<int>(e.integer("components", n.components));
  n.freq_min = e.number("freq_min", n.freq_min);
  n.freq_max = e.number("freq_max", n.freq_max);
  n.period = e.number("period", n.period);
  n.quantum = e.number("quantum", n.quantum);
  n.jitter = e.number("jitter", n.jitter);
  n.ramp = e.number("ramp", n.ramp);
  e.finish();
  s.finish();
  try {
    l.validate();
  } catch (const InvalidArgument& err) {
    throw ConfigError("learning", err.what());
  }
}

}  // namespace

std::string to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::on_policy:
      return "on-policy";
    case ExperimentMode::off_policy:
      return "off-policy";
    case ExperimentMode::model_based:
      return "model-based";
    case ExperimentMode::structured:
      return "structured";
    case ExperimentMode::sparse:
      return "sparse";
    case ExperimentMode::hjb_baseline:
      return "hjb-baseline";
    case ExperimentMode::open_loop:
      return "open-loop";
  }
  return "on-policy";
}

ExperimentMode experiment_mode_from_string(const std::string& name) {
  for (ExperimentMode m : {ExperimentMode::on_policy, ExperimentMode::off_policy, ExperimentMode::model_based,
                           ExperimentMode::structured, ExperimentMode::sparse, ExperimentMode::hjb_baseline,
                           ExperimentMode::open_loop}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown mode '" + name + "'");
}

std::string to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::oscillator:
      return "oscillator";
    case PlantKind::tugboat:
      return "tugboat";
    case PlantKind::linear:
      return "linear";
    case PlantKind::polynomial:
      return "polynomial";
  }
  return "oscillator";
}

ExperimentConfig parse_config(const Json& j) {
  Section root(j, "");
  ExperimentConfig c;
  if (!root.has("schema_version")) throw ConfigError("schema_version", "missing");
  c.schema_version = static_cast<int>(root.integer("schema_version", 0));
  check(0, c.schema_version == kSchemaVersion, "schema_version",
        "unsupported version " + std::to_string(c.schema_version) + " (expected " + std::to_string(kSchemaVersion) +
            ")");
  c.name = root.string("name", c.name);
  check(0, !c.name.empty(), "name", "must not be empty");
  if (!root.has("plant")) throw ConfigError("plant", "missing");
  c.plant = parse_plant(root.child("plant"));
  const int n = plant_state_dim(c.plant);
  const int k = plant_input_dim(c.plant);
  c.truncation = static_cast<int>(root.integer("truncation", c.truncation));
  check(0, c.truncation >= 1 && c.truncation <= 6, "truncation", "must lie in 1..6");
  check(0, c.plant.kind != PlantKind::tugboat || c.truncation <= 3, "truncation",
        "the tugboat model is defined for orders 1..3");

  Section w = root.child("weights");
  if (w.has("Q1")) {
    c.Q1 = w.matrix("Q1");
    check(0, c.Q1->rows() == n && c.Q1->cols() == n, w.path("Q1"), "must be " + std::to_string(n) + " x " +
                                                                         std::to_string(n));
  }
  if (w.has("R")) {
    c.R = w.matrix("R");
    check(0, c.R->rows() == k && c.R->cols() == k, w.path("R"), "must be " + std::to_string(k) + " x " +
                                                                      std::to_string(k));
  }
  c.q_scale = w.number("q_scale", 1.0);
  check(0, c.q_scale > 0.0, w.path("q_scale"), "must be positive");
  w.finish();
  try {
    resolve_weights(c).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("weights", e.what());
  }

  const std::string mode = root.string("mode", "on-policy");
  try {
    c.mode = experiment_mode_from_string(mode);
  } catch (const InvalidArgument& e) {
    throw ConfigError("mode", e.what());
  }
  check(0, c.mode != ExperimentMode::hjb_baseline || c.plant.kind == PlantKind::oscillator, "mode",
        "hjb-baseline is only available for the oscillator");

  parse_learning(root.child("learning"), c);

  Section st = root.child("structured");
  c.structured_evaluation = evaluation_from(st);
  c.structured.tol = st.number("tol", c.structured.tol);
  c.structured.max_iters = static_cast<int>(st.integer("max_iters", c.structured.max_iters));
  c.structured.inner_max = static_cast<int>(st.integer("inner_max", c.structured.inner_max));
  c.structured.inner_tol = st.number("inner_tol", c.structured.inner_tol);
  if (const Json* links = st.find("removed_links")) {
    check(0, links->is_array(), st.path("removed_links"), "expected an array of [a, b] pairs");
    check(0, c.plant.kind == PlantKind::tugboat, st.path("removed_links"), "links need a multi-agent plant");
    for (std::size_t i = 0; i < links->size(); ++i) {
      const Json& l = (*links)[i];
      const std::string path = st.path("removed_links") + "[" + std::to_string(i) + "]";
      check(0, l.is_array() && l.size() == 2 && l[0].is_number_integer() && l[1].is_number_integer(), path,
            "expected [a, b] with 1-based agent numbers");
      const int a = l[0].get<int>();
      const int b = l[1].get<int>();
      check(0, a >= 1 && b >= 1 && a <= c.plant.boats && b <= c.plant.boats && a != b, path,
            "agents must be distinct and lie in 1.." + std::to_string(c.plant.boats));
      c.removed_links.emplace_back(a, b);
    }
  }
  if (st.has("mask")) c.mask = st.matrix("mask");
  try {
    c.structured.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("structured", e.what());
  }
  st.finish();
  if (c.mode == ExperimentMode::structured) {
    check(0, c.plant.kind == PlantKind::tugboat || c.mask.has_value(), "structured.mask",
          "structured synthesis on a single-agent plant needs an explicit mask");
  }

  Section sp = root.child("sparse");
  c.sparse_evaluation = evaluation_from(sp);
  c.admm.gamma = sp.number("gamma", c.admm.gamma);
  c.admm.rho0 = sp.number("rho0", c.admm.rho0);
  c.admm.alpha = sp.number("alpha", c.admm.alpha);
  c.admm.rho_max = sp.number("rho_max", c.admm.rho_max);
  c.admm.eps1 = sp.number("eps1", c.admm.eps1);
  c.admm.eps2 = sp.number("eps2", c.admm.eps2);
  c.admm.max_inner = static_cast<int>(sp.integer("max_inner", c.admm.max_inner));
  if (sp.has("W")) c.admm.W = sp.matrix("W");
  c.link_capacity = static_cast<int>(sp.integer("link_capacity", 0));
  check(0, c.link_capacity >= 0, sp.path("link_capacity"), "must be non-negative");
  try {
    c.admm.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("sparse", e.what());
  }
  sp.finish();

  const bool has_state = root.has("initial_state");
  const bool has_poses = root.has("poses");
  check(0, has_state != has_poses, "initial_state", "give exactly one of initial_state and poses");
  if (has_state) {
    c.initial_state = root.vector("initial_state");
    check(0, c.initial_state.size() == n, "initial_state", "must have " + std::to_string(n) + " entries");
  } else {
    check(0, c.plant.kind == PlantKind::tugboat, "poses", "poses are only defined for the tugboat plant");
    const Json* poses = root.find("poses");
    check(0, poses->is_array() && static_cast<int>(poses->size()) == c.plant.boats, "poses",
          "expected one [X, Y, theta] per boat");
    for (std::size_t i = 0; i < poses->size(); ++i) {
      const Json& p = (*poses)[i];
      const std::string path = "poses[" + std::to_string(i) + "]";
      check(0, p.is_array() && p.size() == 3 && p[0].is_number() && p[1].is_number() && p[2].is_number(), path,
            "expected [X, Y, theta]");
      c.poses.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
  }
  if (root.has("learning_state")) {
    c.learning_state = root.vector("learning_state");
    check(0, c.learning_state->size() == n, "learning_state", "must have " + std::to_string(n) + " entries");
  }
  c.horizon = root.number("horizon", c.horizon);
  check(0, c.horizon > 0.0, "horizon", "must be positive");
  c.eval_step = root.number("eval_step", 0.0);
  check(0, c.eval_step >= 0.0, "eval_step", "must be non-negative (0 selects learning.sim_step)");
  c.output_dir = root.string("output_dir", "");
  const long long seed = root.integer("seed", 1);
  check(0, seed >= 0, "seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.learning.noise.seed = c.seed;
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

Json config_to_json(const ExperimentConfig& c) {
  const CostWeights w = default_weights(c.plant);
  const LearningConfig& l = c.learning;
  const NoiseSpec& n = l.noise;
  Json excitation{{"kind", to_string(n.kind)},     {"amplitude", n.amplitude}, {"components", n.components},
                  {"freq_min", n.freq_min},        {"freq_max", n.freq_max},   {"period", n.period},
                  {"quantum", n.quantum},          {"jitter", n.jitter},       {"ramp", n.ramp}};
  Json structured{{"evaluation", to_string(c.structured_evaluation)},
                  {"tol", c.structured.tol},
                  {"max_iters", c.structured.max_iters},
                  {"inner_max", c.structured.inner_max},
                  {"inner_tol", c.structured.inner_tol}};
  if (c.plant.kind == PlantKind::tugboat) {
    Json links = Json::array();
    for (auto [a, b] : c.removed_links) links.push_back({a, b});
    structured["removed_links"] = std::move(links);
  }
  if (c.mask) structured["mask"] = matrix_to_json(*c.mask);
  Json sparse{{"evaluation", to_string(c.sparse_evaluation)},
              {"gamma", c.admm.gamma},
              {"rho0", c.admm.rho0},
              {"alpha", c.admm.alpha},
              {"rho_max", c.admm.rho_max},
              {"eps1", c.admm.eps1},
              {"eps2", c.admm.eps2},
              {"max_inner", c.admm.max_inner},
              {"link_capacity", c.link_capacity}};
  if (c.admm.W.size() > 0) sparse["W"] = matrix_to_json(c.admm.W);

  Json j{{"schema_version", c.schema_version},
         {"name", c.name},
         {"plant", plant_to_json(c.plant)},
         {"truncation", c.truncation},
         {"weights",
          {{"Q1", matrix_to_json(c.Q1 ? *c.Q1 : w.Q1)}, {"R", matrix_to_json(c.R ? *c.R : w.R)}, {"q_scale", c.q_scale}}},
         {"mode", to_string(c.mode)},
         {"learning",
          {{"T", l.T},
           {"dt", l.dt},
           {"sim_step", l.sim_step},
           {"hold", to_string(l.hold)},
           {"max_iters", l.max_iters},
           {"eps", l.eps},
           {"ridge", l.ridge},
           {"require_convergence", c.require_convergence},
           {"behavior", c.behavior_initial ? "initial" : "zero"},
           {"excitation", std::move(excitation)}}},
         {"structured", std::move(structured)},
         {"sparse", std::move(sparse)}};
  if (!c.poses.empty()) {
    Json poses = Json::array();
    for (const Eigen::Vector3d& p : c.poses) poses.push_back({p(0), p(1), p(2)});
    j["poses"] = std::move(poses);
  } else {
    j["initial_state"] = vector_to_json(c.initial_state);
  }
  if (c.learning_state) j["learning_state"] = vector_to_json(*c.learning_state);
  j["horizon"] = c.horizon;
  j["eval_step"] = c.eval_step;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

Scenario make_scenario(const ExperimentConfig& c) {
  PolynomialPlant plant = build_plant(c.plant, c.truncation);
  const int n = plant.state_dim();
  MonomialBasis basis =
      c.plant.kind == PlantKind::tugboat ? tugboat_basis(c.plant.boats, c.truncation) : monomial_basis(n, c.truncation);
  CostWeights weights = resolve_weights(c);
  std::function<double(const Trajectory&, double)> cost;
  std::vector<int> state_owner;
  std::vector<int> input_owner;
  VectorXd x0 = c.initial_state;
  if (c.plant.kind == PlantKind::tugboat) {
    cost = [weights](const Trajectory& t, double h) { return tugboat_cost(t, weights, h); };
    state_owner = tugboat_owners(c.plant.boats);
    for (int j = 0; j < c.plant.boats; ++j) {
      for (int z = 0; z < kTugboatInputs; ++z) input_owner.push_back(j);
    }
    if (!c.poses.empty()) x0 = tugboat_state(c.poses, tugboat_params());
  } else {
    cost = [weights](const Trajectory& t, double h) { return cost_functional(t, weights, h); };
  }
  return {std::move(plant), std::move(basis), std::move(weights), std::move(cost),
          std::move(state_owner), std::move(input_owner), std::move(x0)};
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok:
      return "ok";
    case RunStatus::diverged:
      return "diverged";
    case RunStatus::infeasible:
      return "infeasible";
  }
  return "ok";
}

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::ok:
      return 0;
    case RunStatus::diverged:
      return 3;
    case RunStatus::infeasible:
      return 4;
  }
  return 4;
}

namespace {

void fail(ExperimentResult& out, RunStatus status, const std::string& message) {
  if (out.status != RunStatus::ok) return;  // keep the first failure
  out.status = status;
  out.message = message;
}

/// Noise-free closed loop from the initial state, scored over the horizon.
void evaluate(ExperimentResult& out, const ExperimentConfig& c, const Scenario& sc, const Controller& controller,
              bool require_contraction) {
  SimOptions opts;
  opts.step = c.eval_step > 0.0 ? c.eval_step : c.learning.sim_step;
  opts.hold = c.learning.hold;
  try {
    out.evaluation = integrate(sc.plant, controller, sc.x0, 0.0, c.horizon, {}, opts);
  } catch (const DivergedError& e) {
    fail(out, RunStatus::diverged, std::string("closed-loop evaluation diverged: ") + e.what());
    return;
  }
  out.evaluated = true;
  out.J = sc.cost(out.evaluation, c.horizon);
  out.final_state_norm = out.evaluation.states.back().norm();
  if (!std::isfinite(out.J)) {
    fail(out, RunStatus::diverged, "closed-loop cost is not finite");
    return;
  }
  if (require_contraction && sc.x0.norm() > 0.0 && !(out.final_state_norm < sc.x0.norm())) {
    std::ostringstream msg;
    msg << "closed loop does not contract: |x(T)| = " << out.final_state_norm << " >= |x(0)| = " << sc.x0.norm();
    fail(out, RunStatus::diverged, msg.str());
  }
  if (c.plant.kind == PlantKind::tugboat) {
    out.extras["distance_objective"] = distance_objective(out.evaluation, c.horizon);
    Json errors = Json::array();
    const VectorXd& xT = out.evaluation.states.back();
    for (int j = 0; j < c.plant.boats; ++j) errors.push_back(xT.segment(kTugboatStates * j, 2).norm());
    out.extras["terminal_position_error"] = std::move(errors);
  }
}

Json bandwidth_json(const BandwidthReport& r, int capacity) {
  Json links = Json::array();
  for (const auto& [link, count] : r.per_link) {
    links.push_back({{"link", {link.first + 1, link.second + 1}}, {"states", count}});
  }
  return Json{{"total", r.total}, {"per_link", std::move(links)}, {"capacity", capacity}, {"overloaded", r.overloaded}};
}

MatrixXd structure_mask(const ExperimentConfig& c, const Scenario& sc, const CarlemanModel<double>& model) {
  if (c.mask) {
    if (c.mask->rows() != model.inputs() || c.mask->cols() != model.size()) {
      throw ConfigError("structured.mask", "must be " + std::to_string(model.inputs()) + " x " +
                                               std::to_string(model.size()));
    }
    return *c.mask;
  }
  std::vector<std::pair<int, int>> removed;
  for (auto [a, b] : c.removed_links) removed.emplace_back(a - 1, b - 1);
  return expand_agent_mask(adjacency_without_links(c.plant.boats, removed), sc.basis, sc.state_owner,
                           sc.input_owner);
}

std::unique_ptr<PolicyEvaluator> make_evaluator(LearningMode mode, const ExperimentConfig& c, const Scenario& sc,
                                                const CarlemanModel<double>& model, const VectorXd& x_learn,
                                                const MatrixXd& K0) {
  if (mode == LearningMode::model_based) return std::make_unique<PolicyEvaluator>(model, sc.weights, c.learning);
  std::optional<MatrixXd> behavior;
  if (c.behavior_initial) behavior = K0;
  return std::make_unique<PolicyEvaluator>(sc.plant, model, sc.weights, c.learning, mode, x_learn, behavior);
}

void learn(ExperimentResult& out, const ExperimentConfig& c, const Scenario& sc, const CarlemanModel<double>& model) {
  const MatrixXd K0 = initial_gain(model, sc.weights).K;
  const VectorXd x_learn = c.learning_state ? *c.learning_state : sc.x0;
  switch (c.mode) {
    case ExperimentMode::on_policy:
    case ExperimentMode::off_policy:
    case ExperimentMode::model_based: {
      LearningResult r;
      if (c.mode == ExperimentMode::on_policy) {
        r = run_on_policy(sc.plant, model, sc.weights, c.learning, K0, x_learn);
      } else if (c.mode == ExperimentMode::off_policy) {
        std::optional<MatrixXd> behavior;
        if (c.behavior_initial) behavior = K0;
        r = run_off_policy(sc.plant, model, sc.weights, c.learning, K0, x_learn, behavior);
      } else {
        r = run_model_based(model, sc.weights, c.learning, K0);
      }
      out.gain = r.gain;
      out.log = r.log;
      out.learning = std::move(r.trajectory);
      break;
    }
    case ExperimentMode::structured: {
      const MatrixXd Omega = structure_mask(c, sc, model);
      StructuredResult r;
      if (c.structured_evaluation == LearningMode::model_based) {
        r = structured_model_based(model, sc.weights, Omega, K0, c.structured);
      } else {
        auto ev = make_evaluator(c.structured_evaluation, c, sc, model, x_learn, K0);
        r = structured_model_free(*ev, model, sc.weights, Omega, K0, c.learning, c.structured);
        out.log = r.log;
        out.learning = std::move(r.trajectory);
      }
      out.gain = r.gain;
      Json removed = Json::array();
      for (auto [a, b] : c.removed_links) removed.push_back({a, b});
      out.extras["structured"] = {{"evaluation", to_string(c.structured_evaluation)},
                                  {"removed_links", std::move(removed)},
                                  {"iterations", r.iterations},
                                  {"inner_sweeps", r.inner_sweeps},
                                  {"delta_l", r.delta_l},
                                  {"masked_max", mask_complement(r.gain.K, Omega).cwiseAbs().maxCoeff()},
                                  {"mask_ones", static_cast<long>(Omega.sum())},
                                  {"mask", matrix_to_json(Omega)}};
      break;
    }
    case ExperimentMode::sparse: {
      auto ev = make_evaluator(c.sparse_evaluation, c, sc, model, x_learn, K0);
      SparseResult r = run_sparse(*ev, model, sc.weights, K0, c.learning, c.admm);
      out.gain = r.learning.gain;
      out.log = r.learning.log;
      out.learning = std::move(r.learning.trajectory);
      Json inner = Json::array();
      for (const AdmmLog& l : r.inner) {
        inner.push_back({{"steps", l.steps}, {"converged", l.converged}, {"final_rho", l.final_rho}});
      }
      out.extras["sparse"] = {{"evaluation", to_string(c.sparse_evaluation)},
                              {"gamma", c.admm.gamma},
                              {"cardinality", cardinality(out.gain->K)},
                              {"inner", std::move(inner)}};
      break;
    }
    case ExperimentMode::hjb_baseline:
    case ExperimentMode::open_loop:
      break;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult out;
  out.config = config_to_json(c);
  const Scenario sc = make_scenario(c);

  if (c.mode == ExperimentMode::open_loop) {
    evaluate(out, c, sc, [k = sc.plant.input_dim()](double, const VectorXd&) { return VectorXd::Zero(k); }, false);
    return out;
  }
  if (c.mode == ExperimentMode::hjb_baseline) {
    evaluate(out, c, sc, [](double, const VectorXd& x) { return VectorXd::Constant(1, hjb_oscillator_control(x)); },
             true);
    return out;
  }

  const CarlemanModel<double> model = carleman_model(sc.plant, sc.basis);
  out.basis = sc.basis;
  try {
    learn(out, c, sc, model);
  } catch (const DivergedError& e) {
    fail(out, RunStatus::diverged, e.what());
  } catch (const IllConditionedError& e) {
    fail(out, RunStatus::infeasible, e.what());
  } catch (const InfeasibleError& e) {
    fail(out, RunStatus::infeasible, e.what());
  }
  if (!out.gain) return out;

  const MatrixXd& K = out.gain->K;
  const int n = model.state_dim();
  out.linear_abscissa = spectral_abscissa<double>(model.linear_A() - model.linear_B() * K.leftCols(n));
  if (out.log && !out.log->converged && c.require_convergence) {
    fail(out, RunStatus::infeasible,
         "learning did not converge in " + std::to_string(c.learning.max_iters) + " iterations");
  }
  if (*out.linear_abscissa >= 0.0) {
    fail(out, RunStatus::diverged, "learned gain leaves the linearized closed loop unstable (spectral abscissa " +
                                       format_number(*out.linear_abscissa) + ")");
  }
  if (!sc.state_owner.empty()) {
    out.extras["bandwidth"] =
        bandwidth_json(bandwidth_metric(K, sc.basis, sc.state_owner, sc.input_owner, c.link_capacity), c.link_capacity);
    out.extras["cardinality"] = cardinality(K);
  }
  evaluate(out, c, sc, lifted_controller(sc.basis, K), true);
  return out;
}

Json result_to_json(const ExperimentResult& r) {
  const Json& cfg = r.config;
  Json j{{"tool_version", tool_version()},
         {"schema_version", kSchemaVersion},
         {"name", cfg.at("name")},
         {"mode", cfg.at("mode")},
         {"plant", cfg.at("plant")},
         {"truncation", cfg.at("truncation")},
         {"horizon", cfg.at("horizon")},
         {"seed", cfg.at("seed")},
         {"status", to_string(r.status)},
         {"exit_code", r.exit_code()},
         {"message", r.message}};
  j["J"] = r.evaluated ? Json(r.J) : Json(nullptr);
  j["final_state_norm"] = r.evaluated ? Json(r.final_state_norm) : Json(nullptr);
  j["linear_spectral_abscissa"] = r.linear_abscissa ? Json(*r.linear_abscissa) : Json(nullptr);
  int iterations = 0;
  long timesteps = 0;
  if (r.log) {
    iterations = r.log->iterations();
    timesteps = r.log->timesteps;
  } else if (r.extras.contains("structured")) {
    iterations = r.extras["structured"]["iterations"].get<int>();
  }
  j["iterations"] = iterations;
  j["timesteps"] = timesteps;
  j["learning"] = r.log ? log_to_json(*r.log) : Json(nullptr);
  for (const auto& item : r.extras.items()) j[item.key()] = item.value();
  Json artifacts{{"config", "config.json"}};
  if (r.evaluated) artifacts["trajectory"] = "trajectory.csv";
  if (!r.learning.empty()) artifacts["learning_trajectory"] = "learning.csv";
  if (r.gain) artifacts["gain"] = "gain.json";
  j["artifacts"] = std::move(artifacts);
  return j;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const char* stale : {"trajectory.csv", "learning.csv", "gain.json"}) std::filesystem::remove(dir / stale);
  write_text(dir / "config.json", r.config.dump(2) + "\n");
  write_text(dir / "result.json", result_to_json(r).dump(2) + "\n");
  if (r.evaluated) write_csv(r.evaluation, (dir / "trajectory.csv").string());
  if (!r.learning.empty()) write_csv(r.learning, (dir / "learning.csv").string());
  if (r.gain && r.basis) write_text(dir / "gain.json", gain_to_json(*r.gain, *r.basis).dump(2) + "\n");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<ComparisonRow> compare_runs(const std::vector<Json>& results, const std::string& reference) {
  detail::require(!results.empty(), "compare: no bundles given");
  const auto scenario = [](const Json& r) {
    detail::require(r.contains("plant") && r.contains("horizon") && r.contains("name"),
                    "compare: result document lacks plant / horizon / name");
    return Json{{"plant", r.at("plant")}, {"horizon", r.at("horizon")}};
  };
  const Json first = scenario(results.front());
  for (const Json& r : results) {
    if (scenario(r) != first) {
      throw InvalidArgument("compare: bundles '" + results.front().at("name").get<std::string>() + "' and '" +
                            r.at("name").get<std::string>() + "' do not share plant and horizon");
    }
  }
  std::size_t ref = results.size();
  for (std::size_t i = 0; i < results.size() && !reference.empty(); ++i) {
    if (results[i].at("name") == reference) ref = i;
  }
  if (!reference.empty() && ref == results.size()) throw InvalidArgument("compare: no bundle named '" + reference + "'");
  for (std::size_t i = 0; i < results.size() && ref == results.size(); ++i) {
    if (results[i].at("mode") == "hjb-baseline") ref = i;
  }
  if (ref == results.size()) ref = 0;
  const auto j_of = [](const Json& r) {
    return r.contains("J") && r.at("J").is_number() ? r.at("J").get<double>()
                                                    : std::numeric_limits<double>::quiet_NaN();
  };
  const double j_ref = j_of(results[ref]);
  std::vector<ComparisonRow> rows;
  for (const Json& r : results) {
    ComparisonRow row;
    row.name = r.at("name").get<std::string>();
    row.mode = r.value("mode", "");
    row.truncation = r.value("truncation", 0);
    row.status = r.value("status", "");
    row.J = j_of(r);
    row.gap = (row.J - j_ref) / std::abs(j_ref);
    row.iterations = r.value("iterations", 0);
    row.timesteps = r.value("timesteps", 0L);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "name,mode,truncation,status,J,gap,iterations,timesteps\n";
  for (const ComparisonRow& r : rows) {
    out << r.name << ',' << r.mode << ',' << r.truncation << ',' << r.status << ',' << format_number(r.J) << ','
        << format_number(r.gap) << ',' << r.iterations << ',' << r.timesteps << '\n';
  }
  return out.str();
}

Json comparison_json(const std::vector<ComparisonRow>& rows) {
  Json out = Json::array();
  for (const ComparisonRow& r : rows) {
    out.push_back({{"name", r.name},
                   {"mode", r.mode},
                   {"truncation", r.truncation},
                   {"status", r.status},
                   {"J", std::isnan(r.J) ? Json(nullptr) : Json(r.J)},
                   {"gap", std::isnan(r.gap) ? Json(nullptr) : Json(r.gap)},
                   {"iterations", r.iterations},
                   {"timesteps", r.timesteps}});
  }
  return out;
}

std::vector<SweepRow> sweep(const Json& base, const std::string& param, const std::vector<Json>& values,
                            const std::filesystem::path& dir, int jobs) {
  detail::require(!values.empty(), "sweep: no values given");
  detail::require(jobs >= 1, "sweep: jobs must be positive");
  std::string pointer;
  std::stringstream parts(param);
  for (std::string part; std::getline(parts, part, '.');) {
    detail::require(!part.empty(), "sweep: bad parameter path '" + param + "'");
    pointer += "/" + part;
  }
  // Parse every variant up front so a bad value fails before any run.
  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Json variant = base;
    variant[Json::json_pointer(pointer)] = values[i];
    configs.push_back(parse_config(variant));
    configs.back().name += "_" + std::to_string(i);
  }
  std::vector<SweepRow> rows(values.size());
  const auto run_one = [&](std::size_t i) {
    const ExperimentResult r = run_experiment(configs[i]);
    const std::filesystem::path bundle = dir / ("run_" + std::to_string(i));
    write_bundle(r, bundle);
    SweepRow& row = rows[i];
    row.value = values[i];
    row.status = r.status;
    row.J = r.J;
    row.evaluated = r.evaluated;
    if (r.extras.contains("bandwidth")) row.bandwidth = r.extras.at("bandwidth").at("total").get<int>();
    if (r.gain) row.cardinality = cardinality(r.gain->K);
    row.bundle = bundle.filename().string();
  };
  for (std::size_t start = 0; start < values.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<void>> batch;
    const std::size_t stop = std::min(values.size(), start + static_cast<std::size_t>(jobs));
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, run_one, i));
    for (auto& f : batch) f.get();
  }

  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  csv << "value,status,exit_code,J,bandwidth,cardinality,bundle\n";
  Json doc{{"param", param}, {"rows", Json::array()}};
  Json last_ok = nullptr;
  for (const SweepRow& row : rows) {
    const std::string value = row.value.is_string() ? row.value.get<std::string>() : row.value.dump();
    csv << value << ',' << to_string(row.status) << ',' << exit_code(row.status) << ','
        << (row.evaluated ? format_number(row.J) : "nan") << ',' << row.bandwidth << ',' << row.cardinality << ','
        << row.bundle << '\n';
    doc["rows"].push_back({{"value", row.value},
                           {"status", to_string(row.status)},
                           {"exit_code", exit_code(row.status)},
                           {"J", row.evaluated ? Json(row.J) : Json(nullptr)},
                           {"bandwidth", row.bandwidth},
                           {"cardinality", row.cardinality},
                           {"bundle", row.bundle}});
    if (row.status == RunStatus::ok) last_ok = row.value;
  }
  doc["last_ok_value"] = last_ok;
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep.json", doc.dump(2) + "\n");
  return rows;
}

}  // namespace carleman
