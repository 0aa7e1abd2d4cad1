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


// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   balance_acceptance [--criterion N]... [--artifacts DIR] [--cli PATH]
//   balance_acceptance --train-policy --artifacts DIR
//
// Without --criterion every check runs. Criteria 7 and 8 use the trained
// policy in DIR when present and train it otherwise. --cli points criterion
// 9 at the command-line binary; without it the library entry point is used.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "balance/harness.hpp"

namespace fs = std::filesystem;
using namespace balance;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Verdict {
  bool pass = true;
  std::vector<std::string> lines;

  // Records one sub-check; the criterion passes only if all of them do.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok    " : "MISS  ") + what);
  }
  void note(const std::string& what) { lines.push_back("info  " + what); }
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Context {
  fs::path artifacts;
  std::string cli;
  std::optional<PolicyNet> net;
  std::optional<json> training;
};

// Trains the default policy (seed 42) and writes it to the artifact dir.
void train_policy(Context& ctx) {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  const auto r = train_policy_pipeline(cfg);
  json j = to_json(r.trained.report);
  j["qtable_shape"] = {r.table_actions, r.table_states};
  if (!ctx.artifacts.empty()) {
    fs::create_directories(ctx.artifacts);
    write_policy_net((ctx.artifacts / "policy.bin").string(), r.trained.net);
    write_text(ctx.artifacts / "nn_training.json", j.dump(2) + "\n");
  }
  ctx.net = r.trained.net;
  ctx.training = j;
}

void ensure_policy(Context& ctx) {
  if (ctx.net) return;
  const fs::path bin = ctx.artifacts / "policy.bin";
  const fs::path rep = ctx.artifacts / "nn_training.json";
  if (!ctx.artifacts.empty() && fs::exists(bin) && fs::exists(rep)) {
    ctx.net = read_policy_net(bin.string());
    std::ifstream is(rep);
    ctx.training = json::parse(is);
    return;
  }
  train_policy(ctx);
}

SimTrace step_run(const PidGains& g, const std::optional<StateFeedback>& fb = std::nullopt) {
  return closed_loop_sim(g, Plant::paper(), SimConfig{}, ReferenceSignal::step(0.1), fb);
}

// ---------------------------------------------------------------------------

Verdict criterion_1(Context&) {
  Verdict v;
  const LinearModel lm = linearize(PlantParams(2.4, 0.23, 0.36, 9.81));
  const struct {
    const char* name;
    double got, want;
  } entries[] = {{"A[1][0]", lm.A(1, 0), 29.8615},
                 {"A[3][0]", lm.A(3, 0), -0.9401},
                 {"B[1]", lm.B[1], -1.1574},
                 {"B[3]", lm.B[3], 0.4167}};
  for (const auto& e : entries) {
    v.check(std::abs(e.got - e.want) <= 5e-3,
            fmt("%s = %.6f vs reference %.4f (|diff| %.2e <= 5e-3)", e.name, e.got, e.want,
                std::abs(e.got - e.want)));
  }
  const LinearModel paper = paper_linear_model();
  const double da = (lm.A - paper.A).cwiseAbs().maxCoeff();
  const double db = (lm.B - paper.B).cwiseAbs().maxCoeff();
  v.check(da <= 5e-3 && db <= 5e-3,
          fmt("all entries: max |dA| %.2e, max |dB| %.2e", da, db));
  return v;
}

Verdict criterion_2(Context&) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const LinearModel m = paper_linear_model();
  const LqrGain g = solve_care(m, LqrWeights{});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double want[4] = {-137.7896, -25.9783, -22.3607, -27.5768};
  for (int i = 0; i < 4; ++i) {
    const double rel = std::abs(g.K[i] - want[i]) / std::abs(want[i]);
    v.check(rel <= 5e-3, fmt("K[%d] = %.4f vs %.4f (rel %.1e <= 0.5%%)", i, g.K[i], want[i], rel));
  }
  const double res = inf_norm(riccati_residual<4>(m.A, m.B, LqrWeights{}.Q, 1.0, g.P));
  v.check(res <= 1e-8, fmt("ARE residual %.2e <= 1e-8", res));
  Eigen::EigenSolver<Mat4> es(m.A - m.B * g.K, false);
  const double re = es.eigenvalues().real().maxCoeff();
  v.check(re < 0.0, fmt("A-BK Hurwitz, max Re(eig) = %.4f", re));
  v.check(secs < 5.0, fmt("solve time %.2f s < 5 s", secs));
  return v;
}

Verdict criterion_3(Context&) {
  Verdict v;
  const SimTrace tr = step_run(prasad_gains());
  const StepMetrics m = step_metrics(tr, Channel::kX, kDefaultSettlingBand);
  const double ise = integrated_squared_error(tr, 0.5, 0.5);
  v.check(m.overshoot == 0.0, fmt("overshoot %.6g %% == 0", m.overshoot));
  auto within = [](const std::optional<double>& x, double ref, double tol) {
    return x && std::abs(*x - ref) <= tol * ref;
  };
  v.check(within(m.rise_time, 4.89, 0.15),
          fmt("rise time %.4f s vs 4.89 s +-15%%", m.rise_time.value_or(NAN)));
  v.check(within(m.settling_time, 9.61, 0.15),
          fmt("settling time %.4f s vs 9.61 s +-15%%", m.settling_time.value_or(NAN)));
  v.check(within(ise, 0.72255, 0.10), fmt("ISE %.6g vs 0.72255 +-10%%", ise));
  v.note("band 2%, horizon 15 s, dt 1e-3 (calibrated defaults)");
  return v;
}

Verdict criterion_4(Context&) {
  Verdict v;
  SimulationObjective objective;
  objective.spec = ObjectiveSpec::defaults(ObjectiveKind::kIse);
  const double prasad = objective(prasad_gains());
  int good = 0;
  bool envelope = true;
  std::size_t accepted = 0;
  for (int rep = 0; rep < 10; ++rep) {
    NltaConfig cfg;
    cfg.rng_seed = splitmix64(kSeed + static_cast<std::uint64_t>(rep));
    const NltaResult r = nlta_run(cfg, objective);
    good += r.best_cost <= 0.50 ? 1 : 0;
    for (const auto& run : r.runs) {
      for (const auto& e : run.log) {
        if (!e.accepted) continue;
        ++accepted;
        envelope = envelope && e.cost_new <= e.cost_old / threshold(e.omega, cfg.omega0);
      }
      envelope = envelope && replay_consistent(run, cfg.omega0);
    }
    v.note(fmt("repetition %d: best-of-10 ISE %.6g (run %d), ratio to Prasad %.3f", rep,
               r.best_cost, r.best_run, r.best_cost / prasad));
  }
  v.check(good >= 9, fmt("%d/10 repetitions with best ISE <= 0.50", good));
  v.check(envelope, fmt("threshold envelope holds on all %zu accepted transitions", accepted));
  return v;
}

Verdict criterion_5(Context&) {
  Verdict v;
  ExperimentConfig cfg;
  const ScenarioResult base = score_trace("prasad", step_run(prasad_gains()), cfg);
  v.note(fmt("Prasad: ISE %.6g, int_U %.6g, int_F %.6g", base.ise, base.int_u, base.int_f));

  auto judge = [&](const std::string& label, const std::string& kind, const PidGains& g) {
    const ScenarioResult r = score_trace(label, step_run(g), cfg);
    v.check(r.ise < base.ise && r.int_u < base.int_u && r.int_f < base.int_f,
            fmt("%s: ISE %.6g, int_U %.6g, int_F %.6g all below Prasad", label.c_str(), r.ise,
                r.int_u, r.int_f));
    if (kind == "ISE-OS") {
      v.check(r.metrics_defined && r.metrics.overshoot <= 0.2,
              fmt("%s: overshoot %.4g %% <= 0.2 %%", label.c_str(), r.metrics.overshoot));
    }
  };
  std::uint64_t k = 0;
  for (ObjectiveKind kind : tuned_objectives()) {
    const TuningSummary t = tune_objective(cfg, kind, splitmix64(kSeed + k++));
    judge(std::string("tuned ") + to_string(kind), to_string(kind), t.result.best_gains);
  }
  for (const auto& [name, g] : load_stored_gains(std::string(BALANCE_DATA_DIR) +
                                                 "/table4_gains.json")) {
    judge("stored " + name, name, g);
  }
  return v;
}

// One-step quadratic cost written out by hand for the brute-force comparison.
double brute_force_cost(const LinearModel& m, const double X[4], double u) {
  double next[4];
  for (int i = 0; i < 4; ++i) {
    double rate = 0.0;
    for (int j = 0; j < 4; ++j) rate += m.A(i, j) * X[j];
    rate += m.B[i] * u;
    next[i] = X[i] + 0.01 * rate;
  }
  const double q[4] = {1.0, 1.0, 50.0, 25.0};
  double cost = 0.0;
  for (int i = 0; i < 4; ++i) cost += next[i] * q[i] * next[i];
  return cost + 0.016 * u * u;
}

Verdict criterion_6(Context&) {
  Verdict v;
  const LinearModel m = paper_linear_model();
  const GridSpec toy = GridSpec::uniform(GridSpec{}.x_max, 5.0, 3, 21);
  const QTable q = build_qtable(toy, m, kDefaultNnStep, NnCostWeights{});
  const double half[4] = {0.175, 0.35, 0.1, 0.2};
  std::size_t mismatches = 0, n = 0;
  for (int a = 0; a < 21; ++a) {
    const double u = (-5.0 * (20 - a) + 5.0 * a) / 20;
    std::size_t s = 0;
    for (int i0 = 0; i0 < 3; ++i0)
      for (int i1 = 0; i1 < 3; ++i1)
        for (int i2 = 0; i2 < 3; ++i2)
          for (int i3 = 0; i3 < 3; ++i3, ++s) {
            const int idx[4] = {i0, i1, i2, i3};
            double X[4];
            for (int k = 0; k < 4; ++k) X[k] = (-half[k] * (2 - idx[k]) + half[k] * idx[k]) / 2;
            const double want = brute_force_cost(m, X, u);
            const double got = q(static_cast<std::size_t>(a), s);
            std::uint64_t wb, gb;
            std::memcpy(&wb, &want, 8);
            std::memcpy(&gb, &got, 8);
            mismatches += wb != gb;
            ++n;
          }
  }
  v.check(mismatches == 0 && n == 21u * 81u,
          fmt("3-point grid: %zu of %zu entries differ from the loop oracle in any bit",
              mismatches, n));
  const QTable full = build_qtable(GridSpec{}, m, kDefaultNnStep, NnCostWeights{});
  v.check(full.actions() == 21 && full.states() == 194481 &&
              full.data().size() == 21u * 194481u,
          fmt("full grid shape (%zu, %zu)", full.actions(), full.states()));
  return v;
}

Verdict criterion_7(Context& ctx) {
  Verdict v;
  // Gradient check on a 4 -> 3 -> 1 net at 10 random parameter points.
  std::mt19937_64 gen(kSeed);
  std::normal_distribution<double> w(0.0, 0.7);
  std::uniform_real_distribution<double> zd(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    PolicyNet net = PolicyNet::zeros(3);
    Eigen::VectorXd p(net.parameter_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = w(gen);
    net.set_parameters(p);
    const Vec4 z(zd(gen), zd(gen), zd(gen), zd(gen));
    Eigen::VectorXd grad(p.size()), fd(p.size());
    forward_with_gradient(net, z, grad);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(p[i]));
      PolicyNet a = net, b = net;
      Eigen::VectorXd pa = p, pb = p;
      pa[i] += h;
      pb[i] -= h;
      a.set_parameters(pa);
      b.set_parameters(pb);
      fd[i] = (a.forward(z) - b.forward(z)) / (2.0 * h);
    }
    worst = std::max(worst, (fd - grad).norm() / grad.norm());
  }
  v.check(worst <= 1e-6, fmt("Jacobian vs central differences: worst relative error %.2e", worst));

  ensure_policy(ctx);
  const json& t = *ctx.training;
  const double nmse = t["normalized_test_mse"].get<double>();
  v.check(nmse <= 1e-2, fmt("normalized test MSE %.4g <= 1e-2 (test MSE %.4g, label var %.4g, "
                            "%d epochs, stop %s)",
                            nmse, t["test_mse"].get<double>(), t["label_variance"].get<double>(),
                            t["epochs"].get<int>(), t["stop_reason"].get<std::string>().c_str()));
  v.note(fmt("trained net at the origin: u = %.4g N", nn_feedback(*ctx.net, Vec4::Zero())));

  const GridSpec g;
  const PolicyDataset d =
      extract_policy(build_qtable(g, paper_linear_model(), kDefaultNnStep, NnCostWeights{}));
  std::size_t broken = 0;
  for (std::size_t s = 0; s < g.state_count(); ++s) {
    auto idx = g.state_indices(s);
    for (int i = 0; i < 4; ++i) idx[i] = g.x_points[i] - 1 - idx[i];
    const auto m = static_cast<Eigen::Index>(g.state_column(idx));
    broken += d.labels[m] != -d.labels[static_cast<Eigen::Index>(s)];
  }
  v.check(broken == 0, fmt("extracted policy odd: %zu of %zu states violate u(-s) = -u(s)",
                           broken, g.state_count()));
  return v;
}

Verdict criterion_8(Context& ctx) {
  Verdict v;
  ensure_policy(ctx);
  ExperimentConfig cfg;
  const PidGains ise = published_tuned_gains().at("ISE");
  const ScenarioResult alone = score_trace("PID (ISE)", step_run(ise), cfg);
  ScenarioResult combined;
  try {
    combined = score_trace("PID (ISE) + NN", step_run(ise, nn_state_feedback(*ctx.net)), cfg);
  } catch (const DivergenceError& e) {
    v.check(false, std::string("PID (ISE) + NN diverged: ") + e.what());
    return v;
  }
  v.check(combined.int_f <= alone.int_f,
          fmt("int_F %.6g (with NN) <= %.6g (PID alone)", combined.int_f, alone.int_f));
  v.check(combined.int_u <= alone.int_u,
          fmt("int_U %.6g (with NN) <= %.6g (PID alone)", combined.int_u, alone.int_u));
  for (const PaperRow& p : paper_rows()) {
    if (std::string(p.method) != "PID (ISE) + NN") continue;
    v.note(fmt("deviation from reference row: ISE %+.3g, int_U %+.3g, int_F %+.3g (relative)",
               (combined.ise - p.ise) / p.ise, (combined.int_u - p.int_u) / p.int_u,
               (combined.int_f - p.int_f) / p.int_f));
  }
  if (combined.metrics_defined) {
    v.note(fmt("with NN: overshoot %.4g %%, settling %s", combined.metrics.overshoot,
               combined.metrics.settling_time
                   ? fmt("%.4g s", *combined.metrics.settling_time).c_str()
                   : "undefined"));
  }
  return v;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

void run_reproduce(const Context& ctx, const fs::path& out) {
  fs::remove_all(out);
  fs::create_directories(out.parent_path());
  if (!ctx.cli.empty()) {
    const std::string cmd = "'" + ctx.cli + "' --seed 42 --out '" + out.string() +
                            "' reproduce > '" + out.string() + ".log' 2>&1";
    if (std::system(cmd.c_str()) != 0) throw Error("reproduce failed: " + cmd);
    return;
  }
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  cfg.out_dir = out.string();
  reproduce_tables(cfg, load_stored_gains(std::string(BALANCE_DATA_DIR) + "/table4_gains.json"),
                   false);
}

// Short property sweep over the plant, metric and search invariants.
void invariant_sweep(Verdict& v) {
  const LinearModel lm = paper_linear_model();
  const PlantParams pp(2.4, 0.23, 0.36, 9.81);
  bool eq = true;
  for (double dt : {1e-4, 1e-2, 1.0}) {
    eq = eq && step_rk4(lm, StateVector{}, 0.0, dt).values == Vec4::Zero() &&
         step_rk4(pp, StateVector{}, 0.0, dt).values == Vec4::Zero();
  }
  v.check(eq, "plant: equilibrium preserved by both models");

  std::mt19937_64 gen(kSeed);
  std::uniform_real_distribution<double> small(-1e-4, 1e-4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec4 s(small(gen), small(gen), small(gen), small(gen));
    worst = std::max(worst, (nonlinear_derivative(pp, s, 0.0) -
                             linear_derivative(linearize(pp), s, 0.0))
                                .cwiseAbs()
                                .maxCoeff());
  }
  v.check(worst <= 1e-6, fmt("plant: linear/nonlinear agreement %.2e <= 1e-6", worst));

  // RK4 order against a fine-step reference of the same scheme.
  auto endpoint = [&](double dt) {
    StateVector s(0.01, -0.02, 0.05, 0.01);
    for (long k = 0, n = std::lround(1.0 / dt); k < n; ++k) s = step_rk4(lm, s, 0.0, dt);
    return s.values;
  };
  const Vec4 ref = endpoint(1.25e-4);
  const double e4 = (endpoint(4e-3) - ref).cwiseAbs().maxCoeff();
  const double e2 = (endpoint(2e-3) - ref).cwiseAbs().maxCoeff();
  const double e1 = (endpoint(1e-3) - ref).cwiseAbs().maxCoeff();
  v.check(std::abs(e4 / e2 - 16.0) < 1.0 && std::abs(e2 / e1 - 16.0) < 1.0,
          fmt("plant: RK4 error ratios %.2f, %.2f (about 16)", e4 / e2, e2 / e1));
  Eigen::EigenSolver<Mat4> es(lm.A, false);
  v.check(es.eigenvalues().real().maxCoeff() >= 5.0, "plant: open-loop eigenvalue >= 5");

  const SimTrace tr = step_run(prasad_gains());
  SimTrace scaled = tr;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    scaled.x[k] = tr.x_ref[k] - 2.0 * tr.error_x(k);
    scaled.theta[k] = tr.theta_ref[k] - 2.0 * tr.error_theta(k);
  }
  const double i1 = integrated_squared_error(tr, 0.5, 0.5);
  const double i2 = integrated_squared_error(scaled, 0.5, 0.5);
  v.check(std::abs(i2 - 4.0 * i1) <= 1e-12 * i2, "metrics: ISE scales with c^2");
  const StepMetrics m = step_metrics(tr, Channel::kX);
  v.check(m.rise_time && m.settling_time && *m.rise_time <= *m.settling_time &&
              m.overshoot >= 0.0,
          "metrics: rise <= settling, overshoot >= 0");

  auto bowl = [](const PidGains& g) {
    const GainBounds b = default_gain_bounds();
    double s = 0.0;
    for (std::size_t i = 0; i < PidGains::kCount; ++i) {
      const double d = g[i] - 0.5 * (b[i].lo + b[i].hi);
      s += d * d;
    }
    return s;
  };
  NltaConfig cfg;
  cfg.rng_seed = kSeed;
  const NltaResult a = nlta_run(cfg, bowl), b = nlta_run(cfg, bowl);
  bool ok = a.best_gains.as_array() == b.best_gains.as_array();
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    ok = ok && replay_consistent(a.runs[r], cfg.omega0) && within(a.runs[r].best_gains, cfg.bounds);
    double prev = INFINITY;
    for (const auto& e : a.runs[r].log) {
      ok = ok && e.omega <= prev && e.omega > 0.0 && e.cost_old == b.runs[r].log[e.iteration - 1].cost_old;
      prev = e.omega;
    }
  }
  v.check(ok, "nlta: envelope replay, omega monotone and positive, bounds, determinism");
  cfg.omega1 = 0.0;
  bool climb = true;
  for (const auto& run : nlta_run(cfg, bowl).runs) {
    double cur = run.initial_cost;
    for (const auto& e : run.log) {
      if (e.accepted) {
        climb = climb && e.cost_new <= cur;
        cur = e.cost_new;
      }
    }
  }
  v.check(climb, "nlta: omega1 = 0 gives a non-increasing accepted sequence");
}

Verdict criterion_9(Context& ctx) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path base =
      (ctx.artifacts.empty() ? fs::temp_directory_path() : ctx.artifacts) / "reproduce";
  run_reproduce(ctx, base / "first");
  run_reproduce(ctx, base / "second");
  const auto a = directory_bytes(base / "first"), b = directory_bytes(base / "second");
  std::vector<std::string> differing;
  std::set<std::string> names;
  for (const auto& [k, _] : a) names.insert(k);
  for (const auto& [k, _] : b) names.insert(k);
  for (const auto& n : names) {
    if (!a.count(n) || !b.count(n) || a.at(n) != b.at(n)) differing.push_back(n);
  }
  std::string list;
  for (const auto& n : differing) list += " " + n;
  v.check(differing.empty() && !a.empty(),
          fmt("reproduce --seed 42 twice: %zu files, %zu differ%s", a.size(), differing.size(),
              list.c_str()));
  v.note(fmt("two reproduce runs took %.0f s",
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
  invariant_sweep(v);
  return v;
}

const std::map<int, std::pair<const char*, std::function<Verdict(Context&)>>>& criteria() {
  static const std::map<int, std::pair<const char*, std::function<Verdict(Context&)>>> c = {
      {1, {"linearization fidelity", criterion_1}},
      {2, {"LQR gain", criterion_2}},
      {3, {"Prasad PID baseline", criterion_3}},
      {4, {"NLTA effectiveness", criterion_4}},
      {5, {"NLTA ordering", criterion_5}},
      {6, {"Q-table oracle equivalence", criterion_6}},
      {7, {"policy network training", criterion_7}},
      {8, {"combined PID + NN scheme", criterion_8}},
      {9, {"determinism suite", criterion_9}},
  };
  return c;
}

int usage() {
  std::fprintf(stderr,
               "usage: balance_acceptance [--criterion N]... [--artifacts DIR] [--cli PATH]\n"
               "       balance_acceptance --train-policy --artifacts DIR\n");
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  std::vector<int> selected;
  bool train_only = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      const int n = std::atoi(argv[++i]);
      if (!criteria().count(n)) return usage();
      selected.push_back(n);
    } else if (a == "--artifacts" && i + 1 < argc) {
      ctx.artifacts = argv[++i];
    } else if (a == "--cli" && i + 1 < argc) {
      ctx.cli = argv[++i];
    } else if (a == "--train-policy") {
      train_only = true;
    } else {
      return usage();
    }
  }

  if (train_only) {
    if (ctx.artifacts.empty()) return usage();
    try {
      train_policy(ctx);
    } catch (const std::exception& e) {
      std::printf("policy training failed: %s\n", e.what());
      return 1;
    }
    std::printf("trained policy written to %s (normalized test MSE %.4g)\n",
                ctx.artifacts.string().c_str(),
                (*ctx.training)["normalized_test_mse"].get<double>());
    return 0;
  }

  if (selected.empty()) {
    for (const auto& [n, _] : criteria()) selected.push_back(n);
  }
  int failed = 0;
  for (int n : selected) {
    const auto& [title, fn] = criteria().at(n);
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn(ctx);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& line : v.lines) std::printf("    %s\n", line.c_str());
    std::printf("%s criterion %d: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", n, title, secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
