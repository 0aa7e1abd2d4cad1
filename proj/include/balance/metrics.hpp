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

#ifndef BALANCE_METRICS_HPP_
#define BALANCE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "balance/errors.hpp"
#include "balance/plant.hpp"
#include "balance/trace.hpp"

namespace balance {

class MetricsUndefinedError : public Error {
 public:
  using Error::Error;
};

enum class Channel { kX, kTheta };

// Absent fields mean the response never produced the event (never crossed
// 10%/90%, never stayed inside the band).
struct StepMetrics {
  std::optional<double> rise_time;
  std::optional<double> settling_time;
  double overshoot = 0.0;  // percent of the step amplitude
  double steady_state_error = 0.0;
};

inline constexpr double kDefaultSettlingBand = 0.02;

namespace detail {

inline const std::vector<double>& signal(const SimTrace& tr, Channel c) {
  return c == Channel::kX ? tr.x : tr.theta;
}
inline const std::vector<double>& reference(const SimTrace& tr, Channel c) {
  return c == Channel::kX ? tr.x_ref : tr.theta_ref;
}

// First time the normalized response z reaches `level`, interpolating
// linearly between samples.
inline std::optional<double> first_crossing(const std::vector<double>& t,
                                            const std::vector<double>& z,
                                            double level) {
  if (z[0] >= level) return t[0];
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (z[k] >= level) {
      const double frac = (level - z[k - 1]) / (z[k] - z[k - 1]);
      return t[k - 1] + frac * (t[k] - t[k - 1]);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Step characteristics of one channel. The step is taken from the resting
// value `baseline` (the plant starts at the origin) to the final reference.
inline StepMetrics step_metrics(const SimTrace& trace,
                                Channel channel = Channel::kX,
                                double band = kDefaultSettlingBand,
                                double baseline = 0.0) {
  if (trace.empty()) throw MetricsUndefinedError("step_metrics: empty trace");
  const auto& y = detail::signal(trace, channel);
  const double ref = detail::reference(trace, channel).back();
  const double amplitude = ref - baseline;
  if (amplitude == 0.0) {
    throw MetricsUndefinedError("step_metrics: zero step amplitude");
  }

  std::vector<double> z(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    z[k] = (y[k] - baseline) / amplitude;
  }

  StepMetrics m;
  const auto t10 = detail::first_crossing(trace.t, z, 0.1);
  const auto t90 = detail::first_crossing(trace.t, z, 0.9);
  if (t10 && t90) m.rise_time = *t90 - *t10;

  // Last exit from the tube |z - 1| <= band.
  std::optional<std::size_t> last_out;
  for (std::size_t k = z.size(); k-- > 0;) {
    if (std::abs(z[k] - 1.0) > band) {
      last_out = k;
      break;
    }
  }
  if (!last_out) {
    m.settling_time = trace.t.front();
  } else if (*last_out + 1 < z.size()) {
    const std::size_t k = *last_out;
    const double d0 = std::abs(z[k] - 1.0) - band;
    const double d1 = std::abs(z[k + 1] - 1.0) - band;
    const double frac = d0 / (d0 - d1);
    m.settling_time = trace.t[k] + frac * (trace.t[k + 1] - trace.t[k]);
  }

  const double peak = *std::max_element(z.begin(), z.end());
  m.overshoot = std::max(0.0, (peak - 1.0) * 100.0);
  m.steady_state_error = ref - y.back();
  return m;
}

// ---------------------------------------------------------------------------
// Tuning objectives

enum class ObjectiveKind { kIse, kIseAb, kIseSt, kIseOs };

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::kIse: return "ISE";
    case ObjectiveKind::kIseAb: return "ISE-AB";
    case ObjectiveKind::kIseSt: return "ISE-ST";
    case ObjectiveKind::kIseOs: return "ISE-OS";
  }
  return "?";
}

inline ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "ISE") return ObjectiveKind::kIse;
  if (s == "ISE-AB") return ObjectiveKind::kIseAb;
  if (s == "ISE-ST" || s == "ISE-TS") return ObjectiveKind::kIseSt;
  if (s == "ISE-OS") return ObjectiveKind::kIseOs;
  throw ConfigError("objective", "unknown kind '" + s + "'");
}

// Cost assigned when a settling time or overshoot is undefined, or the run
// could not be evaluated at all.
inline constexpr double kPenaltyCost = 1e6;

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kIse;
  double w_theta = 0.5;
  double w_x = 0.5;
  double w_theta_abs = 0.0;  // ISE-AB only
  double w_x_abs = 0.0;      // ISE-AB only
  double w_settling = 0.0;   // ISE-ST only
  double w_overshoot = 0.0;  // ISE-OS only
  double band = kDefaultSettlingBand;

  static ObjectiveSpec defaults(ObjectiveKind kind) {
    ObjectiveSpec s;
    s.kind = kind;
    switch (kind) {
      case ObjectiveKind::kIse: break;
      case ObjectiveKind::kIseAb:
        s.w_theta = s.w_x = s.w_theta_abs = s.w_x_abs = 0.25;
        break;
      case ObjectiveKind::kIseSt: s.w_settling = 0.1; break;
      case ObjectiveKind::kIseOs: s.w_overshoot = 0.1; break;
    }
    return s;
  }

  void validate() const {
    for (double w : {w_theta, w_x, w_theta_abs, w_x_abs, w_settling,
                     w_overshoot}) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ConfigError("objective.weights", "must be finite and >= 0");
      }
    }
    if (!(band > 0.0)) throw ConfigError("objective.band", "must be > 0");
  }
};

// Trapezoidal integral of f(k) over the trace time grid.
template <class F>
double trapezoid(const SimTrace& tr, F&& f) {
  double acc = 0.0;
  if (tr.size() < 2) return 0.0;
  double prev = f(std::size_t{0});
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const double cur = f(k);
    acc += 0.5 * (prev + cur) * (tr.t[k] - tr.t[k - 1]);
    prev = cur;
  }
  return acc;
}

inline double integrated_squared_error(const SimTrace& tr, double w_theta,
                                       double w_x) {
  return trapezoid(tr, [&](std::size_t k) {
    const double et = tr.error_theta(k), ex = tr.error_x(k);
    return w_theta * et * et + w_x * ex * ex;
  });
}

inline double evaluate_objective(const SimTrace& tr, const ObjectiveSpec& s) {
  if (tr.empty()) throw MetricsUndefinedError("evaluate_objective: empty trace");
  double cost = integrated_squared_error(tr, s.w_theta, s.w_x);
  switch (s.kind) {
    case ObjectiveKind::kIse: break;
    case ObjectiveKind::kIseAb:
      cost += trapezoid(tr, [&](std::size_t k) {
        return s.w_theta_abs * std::abs(tr.error_theta(k)) +
               s.w_x_abs * std::abs(tr.error_x(k));
      });
      break;
    case ObjectiveKind::kIseSt:
    case ObjectiveKind::kIseOs: {
      std::optional<StepMetrics> m;
      try {
        m = step_metrics(tr, Channel::kX, s.band);
      } catch (const MetricsUndefinedError&) {
        return kPenaltyCost;
      }
      if (s.kind == ObjectiveKind::kIseSt) {
        if (!m->settling_time) return kPenaltyCost;
        cost += s.w_settling * *m->settling_time;
      } else {
        cost += s.w_overshoot * m->overshoot;
      }
      break;
    }
  }
  return std::isfinite(cost) ? cost : kPenaltyCost;
}

// ---------------------------------------------------------------------------
// Energy-like comparison integrals

struct QuadraticIntegrals {
  double int_u = 0.0;  // integral of 1/2 (X'QX + R u^2)
  double int_f = 0.0;  // integral of X'Q_nn X + R_nn u^2
};

inline double lqr_running_cost(const Vec4& X, double u, const Mat4& Q,
                               double R) {
  return 0.5 * (X.dot(Q * X) + R * u * u);
}

inline double nn_running_cost(const Vec4& X, double u, const Mat4& Q_nn,
                              double R_nn) {
  return X.dot(Q_nn * X) + R_nn * u * u;
}

// X is the state measured from the commanded operating point; for a
// regulation run (zero references) this is the raw state.
inline QuadraticIntegrals quadratic_integrals(const SimTrace& tr, const Mat4& Q,
                                              double R, const Mat4& Q_nn,
                                              double R_nn) {
  QuadraticIntegrals out;
  out.int_u = trapezoid(tr, [&](std::size_t k) {
    return lqr_running_cost(tr.tracking_state(k), tr.u[k], Q, R);
  });
  out.int_f = trapezoid(tr, [&](std::size_t k) {
    return nn_running_cost(tr.tracking_state(k), tr.u[k], Q_nn, R_nn);
  });
  return out;
}

}  // namespace balance

#endif  // BALANCE_METRICS_HPP_
