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


#include "balance/plant.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "balance/control.hpp"
#include "test_util.hpp"

namespace balance {
namespace {

PlantParams table_params(double g) { return PlantParams(2.4, 0.23, 0.36, g); }

TEST(Linearize, ClosedFormEntriesWithStandardGravity) {
  const LinearModel lm = linearize(table_params(9.81));
  // (M+m)g/(Ml), -mg/M, -1/(Ml), 1/M evaluated by hand.
  EXPECT_NEAR(lm.A(1, 0), 2.63 * 9.81 / 0.864, 1e-12);
  EXPECT_NEAR(lm.A(1, 0), 29.86146, 1e-5);
  EXPECT_NEAR(lm.A(3, 0), -0.940125, 1e-6);
  EXPECT_NEAR(lm.B[1], -1.1574074, 1e-6);
  EXPECT_NEAR(lm.B[3], 0.4166667, 1e-6);
  EXPECT_DOUBLE_EQ(lm.A(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(lm.A(2, 3), 1.0);
  EXPECT_TRUE(lm.structurally_valid());
}

TEST(Linearize, MatchesPrintedMatrixWithinTolerance) {
  const LinearModel lm = linearize(table_params(9.81));
  const LinearModel paper = paper_linear_model();
  EXPECT_LE((lm.A - paper.A).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_LE((lm.B - paper.B).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Linearize, MassiveCartLimit) {
  const LinearModel lm = linearize(PlantParams(1e6, 0.23, 0.36, 9.81));
  EXPECT_NEAR(lm.A(3, 0), 0.0, 1e-5);
  EXPECT_NEAR(lm.B[3], 0.0, 1e-5);
}

TEST(Linearize, RejectsInvalidParameters) {
  EXPECT_THROW(linearize(PlantParams(0.0, 0.23, 0.36, 9.8)), ConfigError);
  EXPECT_THROW(linearize(PlantParams(2.4, -1.0, 0.36, 9.8)), ConfigError);
  EXPECT_THROW(linearize(PlantParams(2.4, 0.23, 0.0, 9.8)), ConfigError);
  EXPECT_THROW(linearize(PlantParams(2.4, 0.23, 0.36, -9.8)), ConfigError);
}

TEST(LinearDerivative, Examples) {
  const LinearModel paper = paper_linear_model();
  EXPECT_EQ(linear_derivative(paper, Vec4::Zero(), 0.0), Vec4::Zero());
  const Vec4 d = linear_derivative(paper, Vec4(0.1, 0, 0, 0), 0.0);
  EXPECT_NEAR(d[0], 0.0, 1e-15);
  EXPECT_NEAR(d[1], 2.98615, 1e-12);
  EXPECT_NEAR(d[2], 0.0, 1e-15);
  EXPECT_NEAR(d[3], -0.09401, 1e-12);
  const Vec4 f = linear_derivative(paper, Vec4::Zero(), 2.0);
  EXPECT_NEAR(f[1], -2.3148, 1e-12);
  EXPECT_NEAR(f[3], 0.8334, 1e-12);
}

TEST(NonlinearDerivative, UprightEquilibrium) {
  const PlantParams p = table_params(9.81);
  EXPECT_EQ(nonlinear_derivative(p, Vec4::Zero(), 0.0), Vec4::Zero());
  const Vec4 d = nonlinear_derivative(p, Vec4::Zero(), 1.0);
  EXPECT_NEAR(d[3], 1.0 / 2.4, 1e-12);
  EXPECT_NEAR(d[1], -1.0 / (2.4 * 0.36), 1e-12);
  EXPECT_NEAR(d[3], 0.41667, 1e-5);
  EXPECT_NEAR(d[1], -1.1574, 1e-4);
}

TEST(NonlinearDerivative, SmallAngleAgreesWithLinearization) {
  const PlantParams p = table_params(9.81);
  const LinearModel lm = linearize(p);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1e-4, 1e-4);
  std::uniform_real_distribution<double> force(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec4 s(dist(gen), dist(gen), dist(gen), dist(gen));
    const double u = force(gen);
    const Vec4 diff = nonlinear_derivative(p, s, u) - linear_derivative(lm, s, u);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-6) << "state " << s.transpose();
  }
}

TEST(NonlinearDerivative, DegenerateMassMatrixIsGuarded) {
  // A vanishing cart mass with the rod upright makes the 2x2 system singular.
  PlantParams p = table_params(9.81);
  p.cart_mass = 1e-300;
  EXPECT_THROW(nonlinear_derivative(p, Vec4::Zero(), 0.0),
               DegenerateConfigurationError);
}

TEST(StepRk4, EquilibriumIsExactlyPreserved) {
  for (double dt : {1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
    EXPECT_EQ(step_rk4(paper_linear_model(), StateVector{}, 0.0, dt).values,
              Vec4::Zero());
    EXPECT_EQ(step_rk4(table_params(9.8), StateVector{}, 0.0, dt).values,
              Vec4::Zero());
  }
}

TEST(StepRk4, MatchesTruncatedExponentialSeries) {
  const LinearModel paper = paper_linear_model();
  const Vec4 x0(0.01, 0, 0, 0);
  const Vec4 rk = step_rk4(paper, StateVector(x0), 0.0, 1e-3).values;
  const Vec4 oracle = testing::series_propagate(paper.A, x0, 1e-3, 8);
  EXPECT_LE((rk - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(StepRk4, SelfConvergenceOverOneSecond) {
  const LinearModel paper = paper_linear_model();
  auto run = [&](double dt) {
    StateVector s(0.01, 0, 0, 0);
    const long n = std::lround(1.0 / dt);
    for (long k = 0; k < n; ++k) s = step_rk4(paper, s, 0.0, dt);
    return s.values;
  };
  const Vec4 coarse = run(1e-3), fine = run(5e-4);
  EXPECT_LT((coarse - fine).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(StepRk4, FourthOrderConvergence) {
  const LinearModel paper = paper_linear_model();
  const Vec4 x0(0.01, -0.02, 0.05, 0.01);
  const Vec4 exact = testing::exact_propagate(paper.A, x0, 1.0);
  auto error = [&](double dt) {
    StateVector s(x0);
    const long n = std::lround(1.0 / dt);
    for (long k = 0; k < n; ++k) s = step_rk4(paper, s, 0.0, dt);
    return (s.values - exact).cwiseAbs().maxCoeff();
  };
  const double e4 = error(4e-3), e2 = error(2e-3), e1 = error(1e-3);
  EXPECT_NEAR(e4 / e2, 16.0, 1.0);
  EXPECT_NEAR(e2 / e1, 16.0, 1.0);
}

TEST(StepRk4, RejectsNonPositiveStep) {
  EXPECT_THROW(step_rk4(paper_linear_model(), StateVector{}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(step_rk4(paper_linear_model(), StateVector{}, 0.0, -1e-3), ConfigError);
}

TEST(OpenLoop, HasFastUnstableMode) {
  Eigen::EigenSolver<Mat4> es(paper_linear_model().A, false);
  EXPECT_GE(es.eigenvalues().real().maxCoeff(), 5.0);
}

TEST(OpenLoop, UncontrolledRunDiverges) {
  SimConfig cfg;
  cfg.horizon = 300.0;
  try {
    closed_loop_sim(PidGains{}, Plant::paper(), cfg, ReferenceSignal::step(0.0),
                    std::nullopt, StateVector(0.01, 0, 0, 0));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), cfg.horizon);
  }
}

TEST(OpenLoop, DirectIntegrationRaisesWithFailureTime) {
  StateVector s(0.01, 0, 0, 0);
  double t = 0.0;
  bool diverged = false;
  try {
    for (int k = 0; k < 1'000'000; ++k, t += 1e-3) {
      s = step_rk4(paper_linear_model(), s, 0.0, 1e-3, t);
    }
  } catch (const DivergenceError& e) {
    diverged = true;
    EXPECT_NEAR(e.time(), t + 1e-3, 1e-9);
  }
  EXPECT_TRUE(diverged);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.steps(), 15000u);
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.dt = 1e-3;
  c.horizon = 1e-4;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PlantParams, TableDefaultsUseTabulatedGravity) {
  const PlantParams p;
  EXPECT_DOUBLE_EQ(p.cart_mass, 2.4);
  EXPECT_DOUBLE_EQ(p.bob_mass, 0.23);
  EXPECT_DOUBLE_EQ(p.pendulum_length, 0.36);
  EXPECT_DOUBLE_EQ(p.gravity, 9.8);
}

}  // namespace
}  // namespace balance
