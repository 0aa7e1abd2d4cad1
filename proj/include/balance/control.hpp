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

#ifndef BALANCE_CONTROL_HPP_
#define BALANCE_CONTROL_HPP_

// Coupled angle/position PID loops, the LQR gain from a continuous
// algebraic Riccati solve, and the closed-loop simulator that composes
// u = u_pid + u_fb.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "balance/errors.hpp"
#include "balance/plant.hpp"
#include "balance/trace.hpp"

namespace balance {

// Six PID gains. Array order is (kp_theta, ki_theta, kd_theta, kp_x, ki_x,
// kd_x), the order the tuner searches in.
struct PidGains {
  double kp_theta = 0.0;
  double ki_theta = 0.0;
  double kd_theta = 0.0;
  double kp_x = 0.0;
  double ki_x = 0.0;
  double kd_x = 0.0;

  static constexpr std::size_t kCount = 6;
  static constexpr std::array<const char*, kCount> kNames = {
      "kp_theta", "ki_theta", "kd_theta", "kp_x", "ki_x", "kd_x"};

  std::array<double, kCount> as_array() const {
    return {kp_theta, ki_theta, kd_theta, kp_x, ki_x, kd_x};
  }
  static PidGains from_array(const std::array<double, kCount>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  double operator[](std::size_t i) const { return as_array()[i]; }
  void set(std::size_t i, double v) {
    auto a = as_array();
    a[i] = v;
    *this = from_array(a);
  }
  bool finite() const {
    for (double g : as_array())
      if (!std::isfinite(g)) return false;
    return true;
  }
  bool operator==(const PidGains&) const = default;
};

// Baseline hand-tuned gains for the reference cart (angle loop -40, 0, -8;
// position loop -1, 0, -3).
inline PidGains prasad_gains() { return {-40.0, 0.0, -8.0, -1.0, 0.0, -3.0}; }

struct PidState {
  double integral_theta = 0.0;
  double integral_x = 0.0;
  double prev_error_theta = 0.0;
  double prev_error_x = 0.0;
  bool initialized = false;

  void reset() { *this = PidState{}; }
};

struct PidOutput {
  double u = 0.0;
  double u_theta = 0.0;
  double u_x = 0.0;
  PidState state;
};

// Trapezoidal integral and backward-difference derivative of the error;
// the first sample after a reset contributes no derivative and no area.
inline PidOutput pid_update(const PidGains& g, const PidState& in,
                            double e_theta, double e_x, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
  if (!std::isfinite(e_theta) || !std::isfinite(e_x)) {
    throw Error("pid_update: non-finite tracking error");
  }
  PidOutput out;
  out.state = in;
  double de_theta = 0.0, de_x = 0.0;
  if (in.initialized) {
    out.state.integral_theta += 0.5 * (e_theta + in.prev_error_theta) * dt;
    out.state.integral_x += 0.5 * (e_x + in.prev_error_x) * dt;
    de_theta = (e_theta - in.prev_error_theta) / dt;
    de_x = (e_x - in.prev_error_x) / dt;
  }
  out.state.prev_error_theta = e_theta;
  out.state.prev_error_x = e_x;
  out.state.initialized = true;

  out.u_theta = g.kp_theta * e_theta + g.ki_theta * out.state.integral_theta +
                g.kd_theta * de_theta;
  out.u_x = g.kp_x * e_x + g.ki_x * out.state.integral_x + g.kd_x * de_x;
  out.u = out.u_theta + out.u_x;
  return out;
}

// ---------------------------------------------------------------------------
// LQR

struct LqrWeights {
  Mat4 Q = Vec4(1.0, 1.0, 500.0, 250.0).asDiagonal();
  double R = 1.0;

  void validate() const {
    if (!Q.allFinite() || (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("Q", "must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat4> es(Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw ConfigError("Q", "must be positive semidefinite");
    }
    if (!(R > 0.0) || !std::isfinite(R)) {
      throw ConfigError("R", "must be finite and > 0");
    }
  }
};

template <int N>
struct LqrSolution {
  Eigen::Matrix<double, 1, N> K;
  Eigen::Matrix<double, N, N> P;
  double residual = 0.0;  // inf-norm of the ARE residual at P
  long steps = 0;         // Riccati integration steps taken
};

using LqrGain = LqrSolution<4>;

struct CareOptions {
  double step = 1e-3;
  double tolerance = 1e-10;
  long max_steps = 10'000'000;
};

template <int N>
Eigen::Matrix<double, N, N> riccati_residual(
    const Eigen::Matrix<double, N, N>& A, const Eigen::Matrix<double, N, 1>& B,
    const Eigen::Matrix<double, N, N>& Q, double R,
    const Eigen::Matrix<double, N, N>& P) {
  const Eigen::Matrix<double, N, 1> PB = P * B;
  return A.transpose() * P + P * A - (PB * PB.transpose()) / R + Q;
}

// Max absolute row sum.
template <class Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// Integrates dP/dt = A'P + PA - PBR^-1B'P + Q from P = 0 with RK4 until the
// right-hand side is below tolerance, then returns K = R^-1 B'P.
template <int N>
LqrSolution<N> solve_care(const Eigen::Matrix<double, N, N>& A,
                          const Eigen::Matrix<double, N, 1>& B,
                          const Eigen::Matrix<double, N, N>& Q, double R,
                          const CareOptions& opt = {}) {
  using MatN = Eigen::Matrix<double, N, N>;
  if (!(R > 0.0)) throw ConfigError("R", "must be > 0");
  auto rhs = [&](const MatN& P) { return riccati_residual<N>(A, B, Q, R, P); };

  MatN P = MatN::Zero();
  // Compensation term of a Kahan sum over the increments. Near the fixed
  // point the increments fall below the rounding unit of P and would
  // otherwise be lost, stalling the residual around 1e-10.
  MatN carry = MatN::Zero();
  const double h = opt.step;
  double res = inf_norm(rhs(P));
  long step = 0;
  while (res > opt.tolerance && step < opt.max_steps) {
    const MatN k1 = rhs(P);
    const MatN k2 = rhs(P + 0.5 * h * k1);
    const MatN k3 = rhs(P + 0.5 * h * k2);
    const MatN k4 = rhs(P + h * k3);
    MatN inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    inc = 0.5 * (inc + inc.transpose()).eval();
    const MatN y = inc - carry;
    const MatN next = P + y;
    carry = (next - P) - y;
    P = next;
    if (!P.allFinite()) {
      throw SolverError("Riccati integration diverged", res);
    }
    res = inf_norm(rhs(P));
    ++step;
  }
  if (res > opt.tolerance) {
    throw SolverError("Riccati integration did not converge in " +
                          std::to_string(opt.max_steps) + " steps",
                      res);
  }

  LqrSolution<N> out;
  out.P = P;
  out.K = (B.transpose() * P) / R;
  out.residual = res;
  out.steps = step;

  Eigen::SelfAdjointEigenSolver<MatN> es(P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw SolverError("Riccati solution is not positive semidefinite", res);
  }
  const MatN closed = A - B * out.K;
  Eigen::EigenSolver<MatN> ev(closed, false);
  if (ev.eigenvalues().real().maxCoeff() >= 0.0) {
    throw SolverError("closed loop A - BK is not Hurwitz", res);
  }
  return out;
}

inline LqrGain solve_care(const LinearModel& model, const LqrWeights& w,
                          const CareOptions& opt = {}) {
  w.validate();
  return solve_care<4>(model.A, model.B, w.Q, w.R, opt);
}

inline double lqr_feedback(const LqrGain& gain, const Vec4& state) {
  return -gain.K.dot(state);
}

inline double lqr_feedback(const LqrGain& gain, const StateVector& state) {
  return lqr_feedback(gain, state.values);
}

// ---------------------------------------------------------------------------
// References and closed loop

struct ReferenceSignal {
  enum class Kind { kStep, kSquare };
  Kind kind = Kind::kStep;
  double x_step = 0.1;  // step amplitude for kStep
  double theta = 0.0;
  double low = 0.08;    // square wave levels, starting low
  double high = 0.12;
  double period = 20.0;

  static ReferenceSignal step(double x_amplitude, double theta_ref = 0.0) {
    ReferenceSignal r;
    r.kind = Kind::kStep;
    r.x_step = x_amplitude;
    r.theta = theta_ref;
    return r;
  }
  static ReferenceSignal square(double low, double high, double period) {
    ReferenceSignal r;
    r.kind = Kind::kSquare;
    r.low = low;
    r.high = high;
    r.period = period;
    return r;
  }

  double x_ref(double t) const {
    if (kind == Kind::kStep) return x_step;
    const double phase = std::fmod(t, period);
    return phase < 0.5 * period ? low : high;
  }
  double theta_ref(double) const { return theta; }
};

// Which state a feedback law sees: the raw plant state, or the state
// measured from the commanded operating point (theta_ref, 0, x_ref, 0).
enum class FeedbackInput { kTrackingError, kRawState };

struct StateFeedback {
  std::function<double(const Vec4&)> law;
  FeedbackInput input = FeedbackInput::kTrackingError;
};

inline StateFeedback lqr_state_feedback(
    const LqrGain& gain, FeedbackInput input = FeedbackInput::kTrackingError) {
  return {[gain](const Vec4& s) { return lqr_feedback(gain, s); }, input};
}

class GainsDivergenceError : public DivergenceError {
 public:
  GainsDivergenceError(double time, const PidGains& gains)
      : DivergenceError(time), gains_(gains) {}
  const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_;
};

// Closed loop of the PID pair (plus optional state feedback) around the
// plant. Samples k = 0..steps are recorded; the controller runs at the
// integrator rate.
inline SimTrace closed_loop_sim(const PidGains& gains, const Plant& plant,
                                const SimConfig& cfg,
                                const ReferenceSignal& ref,
                                const std::optional<StateFeedback>& feedback =
                                    std::nullopt,
                                const StateVector& initial = {}) {
  cfg.validate();
  if (!gains.finite()) throw ConfigError("gains", "must be finite");
  const std::size_t n = cfg.steps();
  const double dt = cfg.dt;

  SimTrace trace;
  trace.reserve(n + 1);
  PidState pid;
  Vec4 s = initial.values;
  auto f = [&plant](const Vec4& x, double u) { return plant.derivative(x, u); };

  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double th_ref = ref.theta_ref(t);
    const double x_ref = ref.x_ref(t);
    const PidOutput pid_out =
        pid_update(gains, pid, th_ref - s[kTheta], x_ref - s[kX], dt);
    pid = pid_out.state;

    double u_fb = 0.0;
    if (feedback && feedback->law) {
      Vec4 fb_state = s;
      if (feedback->input == FeedbackInput::kTrackingError) {
        fb_state[kTheta] -= th_ref;
        fb_state[kX] -= x_ref;
      }
      u_fb = feedback->law(fb_state);
    }
    const double u = pid_out.u + u_fb;
    trace.push(t, s, u, pid_out.u, u_fb, th_ref, x_ref);
    if (k == n) break;
    try {
      s = rk4_step(f, s, u, dt, t);
    } catch (const DivergenceError& e) {
      throw GainsDivergenceError(e.time(), gains);
    }
  }
  return trace;
}

}  // namespace balance

#endif  // BALANCE_CONTROL_HPP_
