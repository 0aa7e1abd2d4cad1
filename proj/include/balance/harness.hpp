// Copyright 2026 The balance-tune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BALANCE_HARNESS_HPP_
#define BALANCE_HARNESS_HPP_

// Experiment orchestration behind the command-line tool: configuration,
// scenario runs, and regeneration of the performance tables and figure
// data series.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "balance/control.hpp"
#include "balance/errors.hpp"
#include "balance/metrics.hpp"
#include "balance/nlta.hpp"
#include "balance/plant.hpp"
#include "balance/policy_nn.hpp"
#include "balance/trace.hpp"

namespace balance {

using json = nlohmann::json;

enum class ControllerKind { kPid, kPidLqr, kPidNn };

inline const char* to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::kPid: return "pid";
    case ControllerKind::kPidLqr: return "pid+lqr";
    case ControllerKind::kPidNn: return "pid+nn";
  }
  return "?";
}

struct ExperimentConfig {
  // Plant: the stock matrices unless explicit parameters are given.
  bool paper_model = true;
  PlantParams params;
  SimConfig sim;

  ReferenceSignal reference = ReferenceSignal::step(0.1);
  ControllerKind controller = ControllerKind::kPid;
  FeedbackInput feedback_input = FeedbackInput::kTrackingError;

  // Exactly one gains source.
  std::variant<PidGains, ObjectiveSpec> gains = prasad_gains();
  NltaConfig nlta;

  LqrWeights lqr;
  NnCostWeights nn_weights;
  double nn_dt = kDefaultNnStep;
  GridSpec grid;
  TrainOptions train;
  std::string nn_path;  // reuse a trained network instead of training

  double band = kDefaultSettlingBand;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  std::string stored_gains_path;

  Plant plant() const {
    if (paper_model) {
      if (sim.model_kind == ModelKind::kNonlinear) return Plant::nonlinear(params);
      return Plant::paper();
    }
    return sim.model_kind == ModelKind::kLinear ? Plant::linear(linearize(params))
                                                : Plant::nonlinear(params);
  }
  LinearModel linear_model() const { return plant().linear_model(); }
};

// ---------------------------------------------------------------------------
// JSON config

namespace detail {

inline double get_number(const json& j, const std::string& key,
                         const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(path + key, "expected a number");
  return j.at(key).get<double>();
}

inline Vec4 get_vec4(const json& j, const std::string& key,
                     const std::string& path, const Vec4& fallback) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 4) {
    throw ConfigError(path + key, "expected an array of 4 numbers");
  }
  Vec4 v;
  for (int i = 0; i < 4; ++i) {
    if (!a[static_cast<std::size_t>(i)].is_number()) {
      throw ConfigError(path + key, "expected an array of 4 numbers");
    }
    v[i] = a[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return k == a; })) {
      throw ConfigError(path + k, "unknown key");
    }
  }
}

}  // namespace detail

inline PidGains gains_from_json(const json& j, const std::string& path = "gains.") {
  PidGains g;
  for (std::size_t i = 0; i < PidGains::kCount; ++i) {
    const char* name = PidGains::kNames[i];
    if (!j.contains(name)) throw ConfigError(path + name, "missing");
    g.set(i, detail::get_number(j, name, path, 0.0));
  }
  return g;
}

inline json gains_to_json(const PidGains& g) {
  json j = json::object();
  for (std::size_t i = 0; i < PidGains::kCount; ++i) j[PidGains::kNames[i]] = g[i];
  return j;
}

inline ExperimentConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::get_number;
  ExperimentConfig c;
  check_keys(j, "", {"plant", "sim", "reference", "controller", "feedback_input",
                     "gains", "nlta", "weights", "nn", "metrics", "seed", "out",
                     "stored_gains"});

  if (j.contains("plant")) {
    const json& p = j["plant"];
    check_keys(p, "plant.", {"model", "M", "m", "l", "g"});
    const std::string model = p.value("model", "paper");
    if (model != "paper" && model != "params") {
      throw ConfigError("plant.model", "expected 'paper' or 'params'");
    }
    c.paper_model = model == "paper";
    c.params.cart_mass = get_number(p, "M", "plant.", c.params.cart_mass);
    c.params.bob_mass = get_number(p, "m", "plant.", c.params.bob_mass);
    c.params.pendulum_length = get_number(p, "l", "plant.", c.params.pendulum_length);
    c.params.gravity = get_number(p, "g", "plant.", c.params.gravity);
    c.params.validate();
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    check_keys(s, "sim.", {"dt", "horizon", "model_kind"});
    c.sim.dt = get_number(s, "dt", "sim.", c.sim.dt);
    c.sim.horizon = get_number(s, "horizon", "sim.", c.sim.horizon);
    const std::string kind = s.value("model_kind", "linear");
    if (kind == "linear") c.sim.model_kind = ModelKind::kLinear;
    else if (kind == "nonlinear") c.sim.model_kind = ModelKind::kNonlinear;
    else throw ConfigError("sim.model_kind", "expected 'linear' or 'nonlinear'");
  }
  if (j.contains("reference")) {
    const json& r = j["reference"];
    const std::string kind = r.value("kind", "step");
    if (kind == "step") {
      check_keys(r, "reference.", {"kind", "x", "theta"});
      c.reference = ReferenceSignal::step(get_number(r, "x", "reference.", 0.1),
                                          get_number(r, "theta", "reference.", 0.0));
    } else if (kind == "square") {
      check_keys(r, "reference.", {"kind", "low", "high", "period", "duration"});
      c.reference = ReferenceSignal::square(get_number(r, "low", "reference.", 0.08),
                                            get_number(r, "high", "reference.", 0.12),
                                            get_number(r, "period", "reference.", 20.0));
      if (!(c.reference.period > 0.0)) {
        throw ConfigError("reference.period", "must be > 0");
      }
      c.sim.horizon = get_number(r, "duration", "reference.", 40.0);
    } else {
      throw ConfigError("reference.kind", "expected 'step' or 'square'");
    }
  }
  if (j.contains("controller")) {
    const std::string k = j["controller"].get<std::string>();
    if (k == "pid") c.controller = ControllerKind::kPid;
    else if (k == "pid+lqr") c.controller = ControllerKind::kPidLqr;
    else if (k == "pid+nn") c.controller = ControllerKind::kPidNn;
    else throw ConfigError("controller", "expected pid | pid+lqr | pid+nn");
  }
  if (j.contains("feedback_input")) {
    const std::string k = j["feedback_input"].get<std::string>();
    if (k == "tracking_error") c.feedback_input = FeedbackInput::kTrackingError;
    else if (k == "raw_state") c.feedback_input = FeedbackInput::kRawState;
    else throw ConfigError("feedback_input", "expected tracking_error | raw_state");
  }
  if (j.contains("gains")) {
    const json& g = j["gains"];
    const std::string src = g.value("source", "explicit");
    if (src == "explicit") {
      check_keys(g, "gains.", {"source", "kp_theta", "ki_theta", "kd_theta",
                               "kp_x", "ki_x", "kd_x"});
      c.gains = gains_from_json(g);
    } else if (src == "nlta") {
      check_keys(g, "gains.", {"source", "objective", "w_theta", "w_x",
                               "w_theta_abs", "w_x_abs", "w_settling", "w_overshoot"});
      ObjectiveSpec spec = ObjectiveSpec::defaults(
          objective_kind_from_string(g.value("objective", "ISE")));
      spec.w_theta = get_number(g, "w_theta", "gains.", spec.w_theta);
      spec.w_x = get_number(g, "w_x", "gains.", spec.w_x);
      spec.w_theta_abs = get_number(g, "w_theta_abs", "gains.", spec.w_theta_abs);
      spec.w_x_abs = get_number(g, "w_x_abs", "gains.", spec.w_x_abs);
      spec.w_settling = get_number(g, "w_settling", "gains.", spec.w_settling);
      spec.w_overshoot = get_number(g, "w_overshoot", "gains.", spec.w_overshoot);
      spec.validate();
      c.gains = spec;
    } else {
      throw ConfigError("gains.source", "expected 'explicit' or 'nlta'");
    }
  }
  if (j.contains("nlta")) {
    const json& n = j["nlta"];
    check_keys(n, "nlta.", {"omega0", "omega1", "delta_omega", "n_t", "n_o", "bounds",
                            "move", "step_fraction"});
    c.nlta.omega0 = get_number(n, "omega0", "nlta.", c.nlta.omega0);
    c.nlta.omega1 = get_number(n, "omega1", "nlta.", c.nlta.omega1);
    c.nlta.delta_omega = get_number(n, "delta_omega", "nlta.", c.nlta.delta_omega);
    c.nlta.n_t = static_cast<int>(get_number(n, "n_t", "nlta.", c.nlta.n_t));
    c.nlta.n_o = static_cast<int>(get_number(n, "n_o", "nlta.", c.nlta.n_o));
    c.nlta.step_fraction = get_number(n, "step_fraction", "nlta.", c.nlta.step_fraction);
    if (n.contains("move")) {
      const std::string m = n["move"].get<std::string>();
      if (m == "resample") c.nlta.move = NeighborMove::kResample;
      else if (m == "local") c.nlta.move = NeighborMove::kLocalStep;
      else throw ConfigError("nlta.move", "expected 'resample' or 'local'");
    }
    if (n.contains("bounds")) {
      const json& b = n["bounds"];
      for (std::size_t i = 0; i < PidGains::kCount; ++i) {
        const char* name = PidGains::kNames[i];
        if (!b.contains(name)) continue;
        const json& iv = b[name];
        if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
          throw ConfigError(std::string("nlta.bounds.") + name, "expected [lo, hi]");
        }
        c.nlta.bounds[i] = {iv[0].get<double>(), iv[1].get<double>()};
      }
    }
    c.nlta.validate();
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    check_keys(w, "weights.", {"Q", "R", "Q_nn", "R_nn"});
    c.lqr.Q = detail::get_vec4(w, "Q", "weights.", c.lqr.Q.diagonal()).asDiagonal();
    c.lqr.R = get_number(w, "R", "weights.", c.lqr.R);
    c.nn_weights.Q =
        detail::get_vec4(w, "Q_nn", "weights.", c.nn_weights.Q.diagonal()).asDiagonal();
    c.nn_weights.R = get_number(w, "R_nn", "weights.", c.nn_weights.R);
    c.lqr.validate();
    if (!(c.nn_weights.R > 0.0)) throw ConfigError("weights.R_nn", "must be > 0");
  }
  if (j.contains("nn")) {
    const json& n = j["nn"];
    check_keys(n, "nn.", {"dt", "hidden", "max_epochs", "points", "u_points",
                          "x_half_width", "u_max", "path"});
    c.nn_dt = get_number(n, "dt", "nn.", c.nn_dt);
    if (!(c.nn_dt > 0.0)) throw ConfigError("nn.dt", "must be > 0");
    c.train.hidden = static_cast<int>(get_number(n, "hidden", "nn.", c.train.hidden));
    c.train.max_epochs =
        static_cast<int>(get_number(n, "max_epochs", "nn.", c.train.max_epochs));
    const int points = static_cast<int>(get_number(n, "points", "nn.", 21));
    const int u_points = static_cast<int>(get_number(n, "u_points", "nn.", 21));
    const Vec4 half = detail::get_vec4(n, "x_half_width", "nn.", c.grid.x_max);
    const double umax = get_number(n, "u_max", "nn.", c.grid.u_max);
    c.grid = GridSpec::uniform(half, umax, points, u_points);
    c.grid.validate();
    c.nn_path = n.value("path", "");
  }
  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    check_keys(m, "metrics.", {"band"});
    c.band = get_number(m, "band", "metrics.", c.band);
    if (!(c.band > 0.0)) throw ConfigError("metrics.band", "must be > 0");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected an unsigned integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("stored_gains")) c.stored_gains_path = j["stored_gains"].get<std::string>();
  c.sim.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot open " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError("--config", e.what());
  }
}

// BALANCE_SEED and BALANCE_OUT override the seed and output directory.
inline void apply_env_overrides(ExperimentConfig& c) {
  if (const char* s = std::getenv("BALANCE_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0') throw ConfigError("BALANCE_SEED", "expected an unsigned integer");
    c.seed = v;
  }
  if (const char* o = std::getenv("BALANCE_OUT"); o && *o) c.out_dir = o;
}

// ---------------------------------------------------------------------------
// Stored tuned gains

inline std::map<std::string, PidGains> load_stored_gains(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("stored_gains", "cannot open " + path);
  const json j = json::parse(is);
  std::map<std::string, PidGains> out;
  for (const auto& [name, g] : j.items()) out[name] = gains_from_json(g, name + ".");
  return out;
}

inline void write_gains_file(const std::string& path,
                             const std::map<std::string, PidGains>& gains) {
  json j = json::object();
  for (const auto& [name, g] : gains) j[name] = gains_to_json(g);
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scenarios

class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& scenario, const std::string& what)
      : Error("scenario '" + scenario + "': " + what), scenario_(scenario) {}
  const std::string& scenario() const { return scenario_; }

 private:
  std::string scenario_;
};

struct ScenarioResult {
  std::string name;
  StepMetrics metrics;
  bool metrics_defined = false;
  double ise = 0.0;
  std::map<std::string, double> objectives;
  double int_u = 0.0;
  double int_f = 0.0;
  std::string trace_path;
};

struct RunReport {
  std::vector<ScenarioResult> scenarios;
};

inline ScenarioResult score_trace(const std::string& name, const SimTrace& tr,
                                  const ExperimentConfig& cfg) {
  ScenarioResult r;
  r.name = name;
  try {
    r.metrics = step_metrics(tr, Channel::kX, cfg.band);
    r.metrics_defined = true;
  } catch (const MetricsUndefinedError&) {
    r.metrics_defined = false;
  }
  r.ise = integrated_squared_error(tr, 0.5, 0.5);
  for (ObjectiveKind k : {ObjectiveKind::kIse, ObjectiveKind::kIseAb,
                          ObjectiveKind::kIseSt, ObjectiveKind::kIseOs}) {
    ObjectiveSpec s = ObjectiveSpec::defaults(k);
    s.band = cfg.band;
    r.objectives[to_string(k)] = evaluate_objective(tr, s);
  }
  const auto q = quadratic_integrals(tr, cfg.lqr.Q, cfg.lqr.R, cfg.nn_weights.Q,
                                     cfg.nn_weights.R);
  r.int_u = q.int_u;
  r.int_f = q.int_f;
  return r;
}

inline json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json to_json(const ScenarioResult& r) {
  json j;
  j["name"] = r.name;
  j["rise_time"] = r.metrics_defined ? optional_json(r.metrics.rise_time) : json(nullptr);
  j["settling_time"] =
      r.metrics_defined ? optional_json(r.metrics.settling_time) : json(nullptr);
  j["overshoot"] = r.metrics_defined ? json(r.metrics.overshoot) : json(nullptr);
  j["steady_state_error"] =
      r.metrics_defined ? json(r.metrics.steady_state_error) : json(nullptr);
  j["ise"] = r.ise;
  j["objectives"] = r.objectives;
  j["int_u"] = r.int_u;
  j["int_f"] = r.int_f;
  j["trace"] = r.trace_path;
  return j;
}

inline json to_json(const RunReport& rep) {
  json j = json::array();
  for (const auto& s : rep.scenarios) j.push_back(to_json(s));
  return j;
}

// Runs `jobs` concurrently when cores are available; results keep job order.
template <class T>
std::vector<T> parallel_map(const std::vector<std::function<T()>>& jobs) {
  std::vector<T> out;
  out.reserve(jobs.size());
  if (std::thread::hardware_concurrency() > 1 && jobs.size() > 1) {
    std::vector<std::future<T>> futures;
    for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, job));
    for (auto& f : futures) out.push_back(f.get());
  } else {
    for (const auto& job : jobs) out.push_back(job());
  }
  return out;
}

inline std::optional<StateFeedback> make_feedback(const ExperimentConfig& cfg,
                                                  const LqrGain* lqr,
                                                  const PolicyNet* net) {
  switch (cfg.controller) {
    case ControllerKind::kPid: return std::nullopt;
    case ControllerKind::kPidLqr: return lqr_state_feedback(*lqr, cfg.feedback_input);
    case ControllerKind::kPidNn: return nn_state_feedback(*net, cfg.feedback_input);
  }
  return std::nullopt;
}

inline SimTrace run_scenario(const std::string& name, const PidGains& gains,
                             const ExperimentConfig& cfg,
                             const std::optional<StateFeedback>& fb) {
  try {
    return closed_loop_sim(gains, cfg.plant(), cfg.sim, cfg.reference, fb);
  } catch (const DivergenceError& e) {
    throw ScenarioError(name, e.what());
  }
}

// Policy pipeline: grid, table, labels, fitted network.
struct PolicyPipelineResult {
  TrainedPolicy trained;
  std::size_t table_actions = 0;
  std::size_t table_states = 0;
};

inline PolicyPipelineResult train_policy_pipeline(const ExperimentConfig& cfg) {
  const QTable table = build_qtable(cfg.grid, cfg.linear_model(), cfg.nn_dt, cfg.nn_weights);
  const PolicyDataset data = extract_policy(table);
  TrainOptions opt = cfg.train;
  opt.seed = cfg.seed;
  opt.input_box = std::make_pair(cfg.grid.x_min, cfg.grid.x_max);
  opt.u_min = cfg.grid.u_min;
  opt.u_max = cfg.grid.u_max;
  PolicyPipelineResult r;
  r.table_actions = table.actions();
  r.table_states = table.states();
  r.trained = train_policy_net(data, opt);
  return r;
}

inline json to_json(const TrainReport& r) {
  json j;
  j["epochs"] = r.epochs;
  j["best_epoch"] = r.best_epoch;
  j["stop_reason"] = r.stop_reason;
  j["final_lambda"] = r.final_lambda;
  j["train_mse"] = r.train_mse;
  j["validation_mse"] = r.validation_mse;
  j["test_mse"] = r.test_mse;
  j["label_variance"] = r.label_variance;
  j["normalized_test_mse"] = r.normalized_test_mse();
  j["split"] = {r.train_size, r.validation_size, r.test_size};
  return j;
}

inline PolicyNet obtain_policy(const ExperimentConfig& cfg, json* report = nullptr) {
  if (!cfg.nn_path.empty()) return read_policy_net(cfg.nn_path);
  auto r = train_policy_pipeline(cfg);
  if (report) *report = to_json(r.trained.report);
  return r.trained.net;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot open " + p.string() + " for writing");
  os << s;
}

// ---------------------------------------------------------------------------
// Table reproduction

struct PaperRow {
  const char* table;
  const char* method;
  double rise, settling, overshoot, ise, int_u, int_f;
};

inline const std::vector<PaperRow>& paper_rows() {
  static const std::vector<PaperRow> rows = {
      {"5", "PID (Prasad)", 4.8914, 9.6098, 0.0, 0.72255, 800.1996, 79.5381},
      {"5", "PID (ISE)", 0.8900, 3.3351, 3.4130, 0.4558, 686.3625, 67.2464},
      {"5", "PID (ISE-ST)", 1.0120, 1.8747, 1.7828, 0.4709, 674.2809, 66.3176},
      {"5", "PID (ISE-OS)", 1.3283, 3.8942, 0.0, 0.5093, 662.3581, 65.4674},
      {"5", "PID (ISE-AB)", 1.0578, 1.9593, 1.2077, 0.4751, 665.5093, 65.5258},
      {"7", "PID + LQR (Prasad)", 3.2407, 6.1969, 0.0, 1.1437, 1207.6, 120.5957},
      {"7", "PID (ISE) + NN", 0.9546, 3.3273, 0.6194, 0.4576, 672.7276, 65.8731},
      {"7", "PID (ISE-ST) + NN", 1.1275, 3.5240, 0.1413, 0.4733, 661.1241, 65.0051},
      {"7", "PID (ISE-OS) + NN", 2.0745, 4.3102, 0.0, 0.5199, 659.5133, 65.1875},
      {"7", "PID (ISE-AB) + NN", 1.2055, 3.4214, 0.0103, 0.4790, 654.4692, 64.4231},
  };
  return rows;
}

// Tuned gains as tabulated, keyed by objective name.
inline std::map<std::string, PidGains> published_tuned_gains() {
  return {
      {"ISE", {-43.9238, 1.2625, -6.1163, -2.8623, -0.0017, -3.5402}},
      {"ISE-ST", {-43.6806, 0.8948, -6.2171, -2.5071, -0.0279, -3.2817}},
      {"ISE-OS", {-42.3380, -1.2595, -6.1730, -1.8106, 0.0, -2.6507}},
      {"ISE-AB", {-43.8129, 0.2949, -6.0142, -2.3795, 0.0, -3.1028}},
  };
}

inline const std::vector<ObjectiveKind>& tuned_objectives() {
  static const std::vector<ObjectiveKind> k = {ObjectiveKind::kIse, ObjectiveKind::kIseSt,
                                               ObjectiveKind::kIseOs, ObjectiveKind::kIseAb};
  return k;
}

inline std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

struct TuningSummary {
  ObjectiveKind kind;
  NltaResult result;
  // Per-run evaluation of the final gains.
  std::vector<ScenarioResult> per_run;
};

inline TuningSummary tune_objective(const ExperimentConfig& cfg, ObjectiveKind kind,
                                    std::uint64_t seed) {
  ExperimentConfig step_cfg = cfg;
  step_cfg.controller = ControllerKind::kPid;
  SimulationObjective objective;
  objective.plant = cfg.plant();
  objective.sim = cfg.sim;
  objective.reference = cfg.reference;
  objective.spec = ObjectiveSpec::defaults(kind);
  objective.spec.band = cfg.band;
  NltaConfig ncfg = cfg.nlta;
  ncfg.rng_seed = seed;
  TuningSummary s{kind, nlta_run(ncfg, objective), {}};
  for (const auto& run : s.result.runs) {
    const SimTrace tr = closed_loop_sim(run.best_gains, objective.plant, cfg.sim, cfg.reference);
    s.per_run.push_back(score_trace("run" + std::to_string(run.run_index), tr, step_cfg));
  }
  return s;
}

struct ReproduceResult {
  RunReport table5;
  RunReport table7;
  std::map<std::string, PidGains> gains;  // by objective name
  std::vector<TuningSummary> tuning;      // filled when retuning
  TrainReport nn_report;
  bool nn_trained = false;
  std::vector<std::string> files;
};

namespace detail {

inline std::string csv_value(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("NA");
}

inline std::string relative_deviation(const std::optional<double>& v, double paper) {
  if (!v) return "NA";
  if (paper == 0.0) return *v == 0.0 ? "0" : "NA";
  return format_double((*v - paper) / paper);
}

inline void scenario_table_csv(std::ostream& os, const RunReport& rep) {
  os << "method,rise_time,settling_time,overshoot,ise,int_u,int_f\n";
  for (const auto& s : rep.scenarios) {
    os << '"' << s.name << '"' << ','
       << csv_value(s.metrics_defined ? s.metrics.rise_time : std::nullopt) << ','
       << csv_value(s.metrics_defined ? s.metrics.settling_time : std::nullopt) << ','
       << csv_value(s.metrics_defined ? std::optional<double>(s.metrics.overshoot)
                                      : std::nullopt)
       << ',' << format_double(s.ise) << ',' << format_double(s.int_u) << ','
       << format_double(s.int_f) << '\n';
  }
}

}  // namespace detail

// Regenerates the PID-only and combined-scheme tables plus the figure data.
// Tuned gains come from `stored` unless `retune` is set, in which case each
// objective is searched with NLTA (seeded from cfg.seed).
inline ReproduceResult reproduce_tables(const ExperimentConfig& base,
                                        const std::map<std::string, PidGains>& stored,
                                        bool retune) {
  namespace fs = std::filesystem;
  const fs::path out(base.out_dir);
  fs::create_directories(out);
  ReproduceResult res;

  ExperimentConfig step_cfg = base;
  step_cfg.reference = ReferenceSignal::step(0.1);
  step_cfg.sim.horizon = base.sim.horizon;

  if (retune) {
    std::uint64_t k = 0;
    for (ObjectiveKind kind : tuned_objectives()) {
      res.tuning.push_back(tune_objective(step_cfg, kind, splitmix64(base.seed + k++)));
      res.gains[to_string(kind)] = res.tuning.back().result.best_gains;
    }
  } else {
    for (ObjectiveKind kind : tuned_objectives()) {
      const auto it = stored.find(to_string(kind));
      if (it == stored.end()) {
        throw ConfigError("stored_gains", std::string("missing entry ") + to_string(kind));
      }
      res.gains[to_string(kind)] = it->second;
    }
  }

  const LqrGain lqr = solve_care(step_cfg.linear_model(), step_cfg.lqr);
  json nn_json;
  const PolicyNet net = obtain_policy(step_cfg, &nn_json);
  res.nn_trained = base.nn_path.empty();
  write_policy_net((out / "policy.bin").string(), net);
  if (res.nn_trained) write_text(out / "nn_training.json", nn_json.dump(2) + "\n");

  struct Row {
    std::string name;
    PidGains gains;
    ControllerKind controller;
  };
  std::vector<Row> t5 = {{"PID (Prasad)", prasad_gains(), ControllerKind::kPid}};
  std::vector<Row> t7 = {{"PID + LQR (Prasad)", prasad_gains(), ControllerKind::kPidLqr}};
  for (ObjectiveKind kind : tuned_objectives()) {
    const std::string k = to_string(kind);
    t5.push_back({"PID (" + k + ")", res.gains[k], ControllerKind::kPid});
    t7.push_back({"PID (" + k + ") + NN", res.gains[k], ControllerKind::kPidNn});
  }

  auto run_rows = [&](const std::vector<Row>& rows, const ExperimentConfig& cfg,
                      const std::string& prefix) {
    std::vector<std::function<std::pair<ScenarioResult, SimTrace>()>> jobs;
    for (const auto& row : rows) {
      jobs.push_back([&, row] {
        ExperimentConfig c = cfg;
        c.controller = row.controller;
        const SimTrace tr = run_scenario(row.name, row.gains, c, make_feedback(c, &lqr, &net));
        ScenarioResult r = score_trace(row.name, tr, c);
        return std::make_pair(r, tr);
      });
    }
    auto results = parallel_map(jobs);
    RunReport rep;
    std::vector<SimTrace> traces;
    for (auto& [r, tr] : results) {
      const std::string file = prefix + slug(r.name) + ".csv";
      write_trace_csv((out / file).string(), tr);
      r.trace_path = file;
      res.files.push_back(file);
      rep.scenarios.push_back(r);
      traces.push_back(std::move(tr));
    }
    return std::make_pair(rep, traces);
  };

  auto [table5, traces5] = run_rows(t5, step_cfg, "trace_");
  auto [table7, traces7] = run_rows(t7, step_cfg, "trace_");
  res.table5 = table5;
  res.table7 = table7;

  // Square-wave tracking with the combined schemes.
  ExperimentConfig sq_cfg = base;
  sq_cfg.reference = ReferenceSignal::square(0.08, 0.12, 20.0);
  sq_cfg.sim.horizon = 40.0;
  auto [square_rep, square_traces] = run_rows(t7, sq_cfg, "square_");
  (void)square_rep;

  // Cumulative |e_x| under the square wave.
  {
    std::ostringstream os;
    os << "t";
    for (const auto& row : t7) os << ',' << slug(row.name);
    os << '\n';
    const std::size_t n = square_traces.front().size();
    std::vector<double> acc(square_traces.size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      os << format_double(square_traces.front().t[k]);
      for (std::size_t s = 0; s < square_traces.size(); ++s) {
        const SimTrace& tr = square_traces[s];
        if (k > 0) {
          acc[s] += 0.5 * (std::abs(tr.error_x(k)) + std::abs(tr.error_x(k - 1))) *
                    (tr.t[k] - tr.t[k - 1]);
        }
        os << ',' << format_double(acc[s]);
      }
      os << '\n';
    }
    write_text(out / "fig9_cumulative_error.csv", os.str());
    res.files.push_back("fig9_cumulative_error.csv");
  }

  {
    std::ostringstream os;
    detail::scenario_table_csv(os, res.table5);
    write_text(out / "table5.csv", os.str());
    res.files.push_back("table5.csv");
  }
  {
    std::ostringstream os;
    detail::scenario_table_csv(os, res.table7);
    write_text(out / "table7.csv", os.str());
    res.files.push_back("table7.csv");
  }
  {
    std::ostringstream os;
    os << "method";
    for (const char* n : PidGains::kNames) os << ',' << n;
    os << '\n';
    os << "\"PID (Prasad)\"";
    for (double g : prasad_gains().as_array()) os << ',' << format_double(g);
    os << '\n';
    for (ObjectiveKind kind : tuned_objectives()) {
      os << to_string(kind);
      for (double g : res.gains[to_string(kind)].as_array()) os << ',' << format_double(g);
      os << '\n';
    }
    write_text(out / "table4.csv", os.str());
    res.files.push_back("table4.csv");
    write_gains_file((out / "gains.json").string(), res.gains);
    res.files.push_back("gains.json");
  }
  if (retune) {
    std::ostringstream os;
    os << "objective,criterion,min,max\n";
    for (const auto& t : res.tuning) {
      auto minmax = [&](auto get) {
        std::optional<double> lo, hi;
        for (const auto& r : t.per_run) {
          const std::optional<double> v = get(r);
          if (!v) continue;
          lo = lo ? std::min(*lo, *v) : *v;
          hi = hi ? std::max(*hi, *v) : *v;
        }
        return std::make_pair(lo, hi);
      };
      auto line = [&](const char* name, auto get) {
        const auto [lo, hi] = minmax(get);
        os << to_string(t.kind) << ',' << name << ',' << detail::csv_value(lo) << ','
           << detail::csv_value(hi) << '\n';
      };
      line("rise_time", [](const ScenarioResult& r) {
        return r.metrics_defined ? r.metrics.rise_time : std::nullopt;
      });
      line("settling_time", [](const ScenarioResult& r) {
        return r.metrics_defined ? r.metrics.settling_time : std::nullopt;
      });
      line("overshoot", [](const ScenarioResult& r) {
        return r.metrics_defined ? std::optional<double>(r.metrics.overshoot) : std::nullopt;
      });
      line("ISE", [](const ScenarioResult& r) { return std::optional<double>(r.ise); });
      if (t.kind != ObjectiveKind::kIse) {
        const std::string key = to_string(t.kind);
        line(to_string(t.kind), [key](const ScenarioResult& r) {
          return std::optional<double>(r.objectives.at(key));
        });
      }
    }
    write_text(out / "table3.csv", os.str());
    res.files.push_back("table3.csv");

    for (const auto& t : res.tuning) {
      std::ostringstream one;
      write_nlta_log_csv(one, t.result.runs);
      const std::string file = "nlta_log_" + slug(to_string(t.kind)) + ".csv";
      write_text(out / file, one.str());
      res.files.push_back(file);
    }
  }

  // Side-by-side comparison, one line per reference row.
  {
    std::ostringstream os;
    os << "table,method,rise_time,rise_time_paper,rise_time_rel_dev,settling_time,"
          "settling_time_paper,settling_time_rel_dev,overshoot,overshoot_paper,"
          "overshoot_rel_dev,ise,ise_paper,ise_rel_dev,int_u,int_u_paper,int_u_rel_dev,"
          "int_f,int_f_paper,int_f_rel_dev\n";
    std::vector<const ScenarioResult*> computed;
    for (const auto& s : res.table5.scenarios) computed.push_back(&s);
    for (const auto& s : res.table7.scenarios) computed.push_back(&s);
    const auto& rows = paper_rows();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const ScenarioResult& s = *computed[i];
      const PaperRow& p = rows[i];
      auto field = [&](const std::optional<double>& v, double paper) {
        os << ',' << detail::csv_value(v) << ',' << format_double(paper) << ','
           << detail::relative_deviation(v, paper);
      };
      os << p.table << ",\"" << p.method << '"';
      field(s.metrics_defined ? s.metrics.rise_time : std::nullopt, p.rise);
      field(s.metrics_defined ? s.metrics.settling_time : std::nullopt, p.settling);
      field(s.metrics_defined ? std::optional<double>(s.metrics.overshoot) : std::nullopt,
            p.overshoot);
      field(s.ise, p.ise);
      field(s.int_u, p.int_u);
      field(s.int_f, p.int_f);
      os << '\n';
    }
    write_text(out / "comparison.csv", os.str());
    res.files.push_back("comparison.csv");
  }

  {
    json j;
    j["table5"] = to_json(res.table5);
    j["table7"] = to_json(res.table7);
    j["lqr_gain"] = {lqr.K[0], lqr.K[1], lqr.K[2], lqr.K[3]};
    write_text(out / "report.json", j.dump(2) + "\n");
    res.files.push_back("report.json");
  }
  return res;
}

}  // namespace balance

#endif  // BALANCE_HARNESS_HPP_
