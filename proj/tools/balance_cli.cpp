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

// Command-line front end: simulate, tune, lqr, train-nn, reproduce.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "balance/harness.hpp"

namespace fs = std::filesystem;
using namespace balance;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
};

ExperimentConfig make_config(const GlobalOptions& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  apply_env_overrides(cfg);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (cfg.stored_gains_path.empty()) {
    cfg.stored_gains_path = std::string(BALANCE_DATA_DIR) + "/table4_gains.json";
  }
  return cfg;
}

PidGains parse_gains_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("--gains", "not a number: '" + item + "'");
    }
  }
  if (v.size() != PidGains::kCount) {
    throw ConfigError("--gains", "expected 6 comma-separated values "
                                 "(kp_theta,ki_theta,kd_theta,kp_x,ki_x,kd_x)");
  }
  return PidGains{v[0], v[1], v[2], v[3], v[4], v[5]};
}

void print_scenario(const ScenarioResult& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("undefined");
  };
  std::cout << r.name << '\n';
  if (r.metrics_defined) {
    std::cout << "  rise_time      " << opt(r.metrics.rise_time) << " s\n"
              << "  settling_time  " << opt(r.metrics.settling_time) << " s\n"
              << "  overshoot      " << format_double(r.metrics.overshoot) << " %\n";
  } else {
    std::cout << "  step metrics   undefined (zero-amplitude step)\n";
  }
  std::cout << "  ISE            " << format_double(r.ise) << '\n'
            << "  int_U          " << format_double(r.int_u) << '\n'
            << "  int_F          " << format_double(r.int_f) << '\n';
}

int cmd_simulate(const GlobalOptions& g, const std::string& gains_list,
                 const std::string& controller, const std::string& nn_path) {
  ExperimentConfig cfg = make_config(g);
  if (!controller.empty()) {
    if (controller == "pid") cfg.controller = ControllerKind::kPid;
    else if (controller == "pid+lqr") cfg.controller = ControllerKind::kPidLqr;
    else if (controller == "pid+nn") cfg.controller = ControllerKind::kPidNn;
    else throw ConfigError("--controller", "expected pid | pid+lqr | pid+nn");
  }
  if (!nn_path.empty()) cfg.nn_path = nn_path;
  if (!gains_list.empty()) cfg.gains = parse_gains_list(gains_list);

  PidGains gains;
  if (const auto* explicit_gains = std::get_if<PidGains>(&cfg.gains)) {
    gains = *explicit_gains;
  } else {
    NltaConfig ncfg = cfg.nlta;
    ncfg.rng_seed = cfg.seed;
    SimulationObjective obj{cfg.plant(), cfg.sim, cfg.reference,
                            std::get<ObjectiveSpec>(cfg.gains)};
    obj.spec.band = cfg.band;
    gains = nlta_run(ncfg, obj).best_gains;
  }

  std::optional<LqrGain> lqr;
  std::optional<PolicyNet> net;
  if (cfg.controller == ControllerKind::kPidLqr) lqr = solve_care(cfg.linear_model(), cfg.lqr);
  if (cfg.controller == ControllerKind::kPidNn) net = obtain_policy(cfg);

  const std::string name = std::string(to_string(cfg.controller)) + " simulation";
  const SimTrace tr = run_scenario(name, gains, cfg,
                                   make_feedback(cfg, lqr ? &*lqr : nullptr,
                                                 net ? &*net : nullptr));
  fs::create_directories(cfg.out_dir);
  const fs::path trace_path = fs::path(cfg.out_dir) / "trace.csv";
  write_trace_csv(trace_path.string(), tr);
  ScenarioResult r = score_trace(name, tr, cfg);
  r.trace_path = "trace.csv";
  json j = to_json(r);
  j["gains"] = gains_to_json(gains);
  write_text(fs::path(cfg.out_dir) / "report.json", j.dump(2) + "\n");
  print_scenario(r);
  std::cout << "wrote " << trace_path.string() << '\n';
  return 0;
}

int cmd_tune(const GlobalOptions& g, const std::string& objective) {
  ExperimentConfig cfg = make_config(g);
  ObjectiveSpec spec = ObjectiveSpec::defaults(ObjectiveKind::kIse);
  if (const auto* s = std::get_if<ObjectiveSpec>(&cfg.gains)) spec = *s;
  if (!objective.empty()) spec = ObjectiveSpec::defaults(objective_kind_from_string(objective));
  spec.band = cfg.band;

  NltaConfig ncfg = cfg.nlta;
  ncfg.rng_seed = cfg.seed;
  SimulationObjective obj{cfg.plant(), cfg.sim, cfg.reference, spec};
  const NltaResult res = nlta_run(ncfg, obj);

  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  write_gains_file((out / "gains.json").string(), {{to_string(spec.kind), res.best_gains}});
  {
    std::ofstream os(out / "nlta_log.csv");
    write_nlta_log_csv(os, res.runs);
  }
  json runs = json::array();
  for (const auto& r : res.runs) {
    runs.push_back({{"run", r.run_index},
                    {"initial_cost", r.initial_cost},
                    {"final_cost", r.best_cost},
                    {"gains", gains_to_json(r.best_gains)}});
  }
  json rep = {{"objective", to_string(spec.kind)},
              {"seed", cfg.seed},
              {"best_run", res.best_run},
              {"best_cost", res.best_cost},
              {"best_gains", gains_to_json(res.best_gains)},
              {"runs", runs}};
  write_text(out / "tune_report.json", rep.dump(2) + "\n");

  std::cout << to_string(spec.kind) << " best cost " << format_double(res.best_cost)
            << " (run " << res.best_run << ")\n";
  for (std::size_t i = 0; i < PidGains::kCount; ++i) {
    std::cout << "  " << PidGains::kNames[i] << " = " << format_double(res.best_gains[i])
              << '\n';
  }
  return 0;
}

int cmd_lqr(const GlobalOptions& g) {
  ExperimentConfig cfg = make_config(g);
  const LqrGain gain = solve_care(cfg.linear_model(), cfg.lqr);
  json j;
  j["K"] = {gain.K[0], gain.K[1], gain.K[2], gain.K[3]};
  json P = json::array();
  for (int r = 0; r < 4; ++r) P.push_back({gain.P(r, 0), gain.P(r, 1), gain.P(r, 2), gain.P(r, 3)});
  j["P"] = P;
  j["residual"] = gain.residual;
  j["riccati_steps"] = gain.steps;
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "lqr.json", j.dump(2) + "\n");
  std::cout << "K = [";
  for (int i = 0; i < 4; ++i) std::cout << (i ? " " : "") << format_double(gain.K[i]);
  std::cout << "]\nresidual = " << format_double(gain.residual) << '\n';
  return 0;
}

int cmd_train_nn(const GlobalOptions& g) {
  ExperimentConfig cfg = make_config(g);
  const auto r = train_policy_pipeline(cfg);
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  write_policy_net((out / "policy.bin").string(), r.trained.net);
  json j = to_json(r.trained.report);
  j["qtable_shape"] = {r.table_actions, r.table_states};
  write_text(out / "nn_training.json", j.dump(2) + "\n");
  std::cout << "Q-table " << r.table_actions << " x " << r.table_states << '\n'
            << "epochs " << r.trained.report.epochs << " (" << r.trained.report.stop_reason
            << ")\n"
            << "test MSE " << format_double(r.trained.report.test_mse) << ", normalized "
            << format_double(r.trained.report.normalized_test_mse()) << '\n';
  return 0;
}

int cmd_reproduce(const GlobalOptions& g, bool retune) {
  ExperimentConfig cfg = make_config(g);
  std::map<std::string, PidGains> stored;
  if (!retune) stored = load_stored_gains(cfg.stored_gains_path);
  const ReproduceResult res = reproduce_tables(cfg, stored, retune);
  for (const auto& s : res.table5.scenarios) print_scenario(s);
  for (const auto& s : res.table7.scenarios) print_scenario(s);
  std::cout << "wrote " << res.files.size() << " files to " << cfg.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuning and simulation toolkit for the cart-pendulum balance system"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--out", g.out_dir, "Output directory");

  std::string gains_list, controller, nn_path, objective;
  bool retune = false;

  auto* sim = app.add_subcommand("simulate", "One closed-loop run: trace CSV and report");
  sim->add_option("--gains", gains_list, "kp_theta,ki_theta,kd_theta,kp_x,ki_x,kd_x");
  sim->add_option("--controller", controller, "pid | pid+lqr | pid+nn");
  sim->add_option("--nn", nn_path, "Trained policy file for pid+nn");

  auto* tune = app.add_subcommand("tune", "NLTA gain search");
  tune->add_option("--objective", objective, "ISE | ISE-AB | ISE-ST | ISE-OS");

  auto* lqr = app.add_subcommand("lqr", "Solve the Riccati equation for the LQR gain");
  auto* train = app.add_subcommand("train-nn", "Q-table policy and network training");

  auto* repro = app.add_subcommand("reproduce", "Regenerate the performance tables");
  repro->add_flag("--retune", retune, "Re-run the gain search instead of stored gains");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*sim) return cmd_simulate(g, gains_list, controller, nn_path);
    if (*tune) return cmd_tune(g, objective);
    if (*lqr) return cmd_lqr(g);
    if (*train) return cmd_train_nn(g);
    if (*repro) return cmd_reproduce(g, retune);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ScenarioError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
