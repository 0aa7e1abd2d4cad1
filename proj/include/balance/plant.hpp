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

#ifndef BALANCE_PLANT_HPP_
#define BALANCE_PLANT_HPP_

// Inverted pendulum on a cart: nonlinear equations of motion, the
// linearization about the upright equilibrium, and a fixed-step RK4
// integrator with zero-order hold on the input force.
//
// State ordering is (theta, theta_dot, x, x_dot) everywhere.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "balance/errors.hpp"

namespace balance {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

enum StateIndex : Eigen::Index { kTheta = 0, kThetaDot = 1, kX = 2, kXDot = 3 };

struct StateVector {
  Vec4 values = Vec4::Zero();

  StateVector() = default;
  explicit StateVector(const Vec4& v) : values(v) {}
  StateVector(double theta, double theta_dot, double x, double x_dot)
      : values(theta, theta_dot, x, x_dot) {}

  double theta() const { return values[kTheta]; }
  double theta_dot() const { return values[kThetaDot]; }
  double x() const { return values[kX]; }
  double x_dot() const { return values[kXDot]; }

  bool finite() const { return values.allFinite(); }
  double operator[](Eigen::Index i) const { return values[i]; }
  double& operator[](Eigen::Index i) { return values[i]; }
};

// Physical parameters: cart mass M, bob mass m, pendulum length l, gravity g.
struct PlantParams {
  double cart_mass = 2.4;
  double bob_mass = 0.23;
  double pendulum_length = 0.36;
  double gravity = 9.8;

  PlantParams() = default;
  PlantParams(double M, double m, double l, double g)
      : cart_mass(M), bob_mass(m), pendulum_length(l), gravity(g) {
    validate();
  }

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(name, "must be finite and strictly positive");
      }
    };
    check(cart_mass, "cart_mass");
    check(bob_mass, "bob_mass");
    check(pendulum_length, "pendulum_length");
    check(gravity, "gravity");
  }
};

// dX/dt = A X + B u.
struct LinearModel {
  Mat4 A = Mat4::Zero();
  Vec4 B = Vec4::Zero();

  // Structural entries: A(0,1) = A(2,3) = 1, B(0) = B(2) = 0.
  bool structurally_valid() const {
    return A(0, 1) == 1.0 && A(2, 3) == 1.0 && B[0] == 0.0 && B[2] == 0.0 &&
           A.allFinite() && B.allFinite();
  }
};

inline LinearModel linearize(const PlantParams& p) {
  p.validate();
  const double M = p.cart_mass, m = p.bob_mass, l = p.pendulum_length,
               g = p.gravity;
  LinearModel lm;
  lm.A(0, 1) = 1.0;
  lm.A(1, 0) = (M + m) * g / (M * l);
  lm.A(2, 3) = 1.0;
  lm.A(3, 0) = -m * g / M;
  lm.B[1] = -1.0 / (M * l);
  lm.B[3] = 1.0 / M;
  return lm;
}

// Stock state-space matrices for the reference cart (they correspond to
// g = 9.81 rather than the nominal 9.8).
inline LinearModel paper_linear_model() {
  LinearModel lm;
  lm.A << 0.0, 1.0, 0.0, 0.0,  //
      29.8615, 0.0, 0.0, 0.0,  //
      0.0, 0.0, 0.0, 1.0,      //
      -0.9401, 0.0, 0.0, 0.0;
  lm.B << 0.0, -1.1574, 0.0, 0.4167;
  return lm;
}

inline Vec4 linear_derivative(const LinearModel& model, const Vec4& x,
                              double u) {
  return model.A * x + model.B * u;
}

inline StateVector linear_derivative(const LinearModel& model,
                                     const StateVector& s, double u) {
  return StateVector(linear_derivative(model, s.values, u));
}

inline constexpr double kMinMassDeterminant = 1e-12;

// Solves the coupled pair
//   (M+m) xdd + m l cos(th) thdd = u + m l sin(th) thd^2
//   m cos(th) xdd + m l thdd     = m g sin(th)
// for (xdd, thdd).
inline Vec4 nonlinear_derivative(const PlantParams& p, const Vec4& s,
                                 double u) {
  const double M = p.cart_mass, m = p.bob_mass, l = p.pendulum_length,
               g = p.gravity;
  const double th = s[kTheta], thd = s[kThetaDot];
  const double c = std::cos(th), sn = std::sin(th);

  const double a11 = M + m, a12 = m * l * c;
  const double a21 = m * c, a22 = m * l;
  const double r1 = u + m * l * sn * thd * thd;
  const double r2 = m * g * sn;

  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) < kMinMassDeterminant) {
    throw DegenerateConfigurationError(det);
  }
  const double xdd = (r1 * a22 - a12 * r2) / det;
  const double thdd = (a11 * r2 - a21 * r1) / det;
  return Vec4(thd, thdd, s[kXDot], xdd);
}

inline StateVector nonlinear_derivative(const PlantParams& p,
                                        const StateVector& s, double u) {
  return StateVector(nonlinear_derivative(p, s.values, u));
}

enum class ModelKind { kLinear, kNonlinear };

inline const char* to_string(ModelKind k) {
  return k == ModelKind::kLinear ? "linear" : "nonlinear";
}

// A plant the integrator can drive: either a linear model or the nonlinear
// equations for a parameter set.
class Plant {
 public:
  static Plant linear(const LinearModel& model) {
    Plant p;
    p.kind_ = ModelKind::kLinear;
    p.linear_ = model;
    return p;
  }
  static Plant nonlinear(const PlantParams& params) {
    params.validate();
    Plant p;
    p.kind_ = ModelKind::kNonlinear;
    p.params_ = params;
    p.linear_ = linearize(params);
    return p;
  }
  static Plant paper() { return linear(paper_linear_model()); }

  ModelKind kind() const { return kind_; }
  // For a nonlinear plant this is its linearization.
  const LinearModel& linear_model() const { return linear_; }
  const PlantParams& params() const { return params_; }

  Vec4 derivative(const Vec4& s, double u) const {
    return kind_ == ModelKind::kLinear ? linear_derivative(linear_, s, u)
                                       : nonlinear_derivative(params_, s, u);
  }

 private:
  ModelKind kind_ = ModelKind::kLinear;
  LinearModel linear_ = paper_linear_model();
  PlantParams params_;
};

// Classical RK4 with u held over the step. `f(x, u)` returns dX/dt.
template <class Derivative>
Vec4 rk4_step(const Derivative& f, const Vec4& x, double u, double dt,
              double t = 0.0) {
  const Vec4 k1 = f(x, u);
  const Vec4 k2 = f(x + 0.5 * dt * k1, u);
  const Vec4 k3 = f(x + 0.5 * dt * k2, u);
  const Vec4 k4 = f(x + dt * k3, u);
  Vec4 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw DivergenceError(t + dt);
  return next;
}

inline StateVector step_rk4(const Plant& plant, const StateVector& s, double u,
                            double dt, double t = 0.0) {
  if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
  return StateVector(rk4_step(
      [&](const Vec4& x, double v) { return plant.derivative(x, v); },
      s.values, u, dt, t));
}

inline StateVector step_rk4(const LinearModel& model, const StateVector& s,
                            double u, double dt, double t = 0.0) {
  return step_rk4(Plant::linear(model), s, u, dt, t);
}

inline StateVector step_rk4(const PlantParams& params, const StateVector& s,
                            double u, double dt, double t = 0.0) {
  return step_rk4(Plant::nonlinear(params), s, u, dt, t);
}

struct SimConfig {
  double dt = 1e-3;
  double horizon = 15.0;
  ModelKind model_kind = ModelKind::kLinear;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw ConfigError("sim.dt", "must be finite and > 0");
    }
    if (!(horizon >= dt) || !std::isfinite(horizon)) {
      throw ConfigError("sim.horizon", "must be finite and >= dt");
    }
    if (horizon / dt > 1e9) {
      throw ConfigError("sim.horizon", "too many integrator steps");
    }
  }

  std::size_t steps() const {
    return static_cast<std::size_t>(std::llround(horizon / dt));
  }
};

}  // namespace balance

#endif  // BALANCE_PLANT_HPP_
