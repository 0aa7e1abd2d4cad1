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

#ifndef BALANCE_NLTA_HPP_
#define BALANCE_NLTA_HPP_

// Nonlinear threshold accepting search over the six PID gains.
//
// Each run starts from a uniform random point of the gain box. A neighbor
// replaces one gain by a fresh draw from its interval, and is accepted when
// its cost ratio to the current point is at most 1 / |H(omega)|, where
// |H| is the magnitude of a first-order low-pass with corner omega0. The
// probe frequency omega starts at omega1 and drops by delta_omega per
// iteration while it stays positive.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <future>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "balance/control.hpp"
#include "balance/errors.hpp"
#include "balance/metrics.hpp"
#include "balance/trace.hpp"

namespace balance {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seedable 64-bit generator with portable uniform draws (the standard
// distributions are implementation-defined, which would break bit-exact
// reproducibility across toolchains).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent substream for run `index` of an experiment seeded `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on {0, ..., n-1}, unbiased by rejection.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
  }

 private:
  std::mt19937_64 engine_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

using GainBounds = std::array<Interval, PidGains::kCount>;

// Table of feasible gain ranges, in PidGains array order.
inline GainBounds default_gain_bounds() {
  return {{{-44.0, -36.0},
           {-2.0, 2.0},
           {-10.0, -6.0},
           {-3.0, 1.0},
           {-2.0, 2.0},
           {-5.0, -1.0}}};
}

inline bool within(const PidGains& g, const GainBounds& b) {
  for (std::size_t i = 0; i < PidGains::kCount; ++i) {
    if (!b[i].contains(g[i])) return false;
  }
  return true;
}

enum class NeighborMove {
  kResample,   // redraw one gain uniformly over its whole interval
  kLocalStep,  // perturb one gain by up to step_fraction of its width
};

struct NltaConfig {
  GainBounds bounds = default_gain_bounds();
  double omega0 = 200.0;
  double omega1 = 50.0;
  double delta_omega = 0.005;
  int n_t = 1000;
  int n_o = 10;
  std::uint64_t rng_seed = 42;
  NeighborMove move = NeighborMove::kResample;
  double step_fraction = 0.1;
  bool parallel = true;

  void validate() const {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      if (!(bounds[i].lo < bounds[i].hi)) {
        throw ConfigError(std::string("bounds.") + PidGains::kNames[i],
                          "lower must be < upper");
      }
    }
    if (!(omega0 > 0.0)) throw ConfigError("omega0", "must be > 0");
    // omega1 = 0 is admitted: it turns the search into pure hill climbing.
    if (!(omega1 >= 0.0)) throw ConfigError("omega1", "must be >= 0");
    if (!(delta_omega > 0.0)) throw ConfigError("delta_omega", "must be > 0");
    if (n_t < 0) throw ConfigError("n_t", "must be >= 0");
    if (n_o < 1) throw ConfigError("n_o", "must be >= 1");
    if (move == NeighborMove::kLocalStep && !(step_fraction > 0.0)) {
      throw ConfigError("step_fraction", "must be > 0");
    }
  }
};

// |H(omega)| of the first-order low-pass with corner omega0.
inline double threshold(double omega, double omega0) {
  const double r = omega / omega0;
  return 1.0 / std::sqrt(1.0 + r * r);
}

inline bool accept(double of_new, double of_old, double omega, double omega0) {
  // of_new / of_old <= 1 or <= 1/|H|, written without the division so that
  // of_old = 0 admits only of_new = 0.
  return of_new <= of_old || of_new <= of_old / threshold(omega, omega0);
}

inline PidGains random_gains(const GainBounds& b, Rng& rng) {
  PidGains g;
  for (std::size_t i = 0; i < PidGains::kCount; ++i) {
    g.set(i, rng.uniform(b[i].lo, b[i].hi));
  }
  return g;
}

inline PidGains propose_neighbor(const PidGains& current, const GainBounds& b,
                                 Rng& rng,
                                 NeighborMove move = NeighborMove::kResample,
                                 double step_fraction = 0.1) {
  PidGains next = current;
  const std::size_t i = rng.index(PidGains::kCount);
  if (move == NeighborMove::kResample) {
    next.set(i, rng.uniform(b[i].lo, b[i].hi));
  } else {
    const double span = step_fraction * b[i].width();
    const double v = current[i] + rng.uniform(-span, span);
    next.set(i, std::clamp(v, b[i].lo, b[i].hi));
  }
  return next;
}

struct NltaLogEntry {
  int iteration = 0;
  double omega = 0.0;
  double cost_old = 0.0;
  double cost_new = 0.0;
  bool accepted = false;
};

struct NltaRunRecord {
  int run_index = 0;
  PidGains initial_gains;
  double initial_cost = 0.0;
  PidGains best_gains;  // the run's final current point
  double best_cost = 0.0;
  std::vector<NltaLogEntry> log;
};

struct NltaResult {
  PidGains best_gains;
  double best_cost = 0.0;
  int best_run = 0;
  std::vector<NltaRunRecord> runs;
};

// Cost of a candidate; failures and non-finite values become the penalty.
template <class Objective>
double safe_cost(const Objective& objective, const PidGains& g) {
  try {
    const double c = objective(g);
    return std::isfinite(c) ? c : kPenaltyCost;
  } catch (const Error&) {
    return kPenaltyCost;
  }
}

template <class Objective>
NltaRunRecord nlta_single_run(const NltaConfig& cfg, const Objective& objective,
                              int run_index) {
  Rng rng = Rng::substream(cfg.rng_seed, static_cast<std::uint64_t>(run_index));
  NltaRunRecord rec;
  rec.run_index = run_index;
  rec.log.reserve(static_cast<std::size_t>(cfg.n_t));

  PidGains current = random_gains(cfg.bounds, rng);
  double of_old = safe_cost(objective, current);
  rec.initial_gains = current;
  rec.initial_cost = of_old;

  double omega = cfg.omega1;
  for (int i = 1; i <= cfg.n_t; ++i) {
    const PidGains candidate =
        propose_neighbor(current, cfg.bounds, rng, cfg.move, cfg.step_fraction);
    const double of_new = safe_cost(objective, candidate);
    const bool ok = accept(of_new, of_old, omega, cfg.omega0);
    rec.log.push_back({i, omega, of_old, of_new, ok});
    if (ok) {
      current = candidate;
      of_old = of_new;
    }
    if (omega - cfg.delta_omega > 0.0) omega -= cfg.delta_omega;
  }
  rec.best_gains = current;
  rec.best_cost = of_old;
  return rec;
}

// Runs n_o independent searches and returns the gains of the run with the
// lowest final cost (earliest run on ties). `objective` must be safe to call
// concurrently when cfg.parallel is set.
template <class Objective>
NltaResult nlta_run(const NltaConfig& cfg, const Objective& objective) {
  cfg.validate();
  NltaResult result;
  result.runs.resize(static_cast<std::size_t>(cfg.n_o));

  const unsigned hw = std::thread::hardware_concurrency();
  if (cfg.parallel && hw > 1 && cfg.n_o > 1) {
    std::vector<std::future<NltaRunRecord>> jobs;
    jobs.reserve(result.runs.size());
    for (int q = 0; q < cfg.n_o; ++q) {
      jobs.push_back(std::async(std::launch::async, [&cfg, &objective, q] {
        return nlta_single_run(cfg, objective, q);
      }));
    }
    for (std::size_t q = 0; q < jobs.size(); ++q) result.runs[q] = jobs[q].get();
  } else {
    for (int q = 0; q < cfg.n_o; ++q) {
      result.runs[static_cast<std::size_t>(q)] =
          nlta_single_run(cfg, objective, q);
    }
  }

  result.best_run = 0;
  for (std::size_t q = 1; q < result.runs.size(); ++q) {
    if (result.runs[q].best_cost <
        result.runs[static_cast<std::size_t>(result.best_run)].best_cost) {
      result.best_run = static_cast<int>(q);
    }
  }
  const auto& best = result.runs[static_cast<std::size_t>(result.best_run)];
  result.best_gains = best.best_gains;
  result.best_cost = best.best_cost;
  return result;
}

// Closed-loop step simulation scored by an objective; the usual thing to
// hand to nlta_run.
struct SimulationObjective {
  Plant plant = Plant::paper();
  SimConfig sim;
  ReferenceSignal reference = ReferenceSignal::step(0.1);
  ObjectiveSpec spec;

  double operator()(const PidGains& g) const {
    return evaluate_objective(closed_loop_sim(g, plant, sim, reference), spec);
  }
};

inline void write_nlta_log_csv(std::ostream& os,
                               const std::vector<NltaRunRecord>& runs) {
  os << "run,iter,omega,cost_old,cost_new,accepted\n";
  for (const auto& r : runs) {
    for (const auto& e : r.log) {
      os << r.run_index << ',' << e.iteration << ',' << format_double(e.omega)
         << ',' << format_double(e.cost_old) << ','
         << format_double(e.cost_new) << ',' << (e.accepted ? 1 : 0) << '\n';
    }
  }
}

// Replays the accept rule over a run log; false if any decision disagrees.
inline bool replay_consistent(const NltaRunRecord& rec, double omega0) {
  double current = rec.initial_cost;
  for (const auto& e : rec.log) {
    if (e.cost_old != current) return false;
    if (accept(e.cost_new, e.cost_old, e.omega, omega0) != e.accepted) {
      return false;
    }
    if (e.accepted) current = e.cost_new;
  }
  return current == rec.best_cost;
}

}  // namespace balance

#endif  // BALANCE_NLTA_HPP_
