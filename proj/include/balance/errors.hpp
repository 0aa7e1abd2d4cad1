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

#ifndef BALANCE_ERRORS_HPP_
#define BALANCE_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace balance {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the integrator when a step produces a non-finite state.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(double time)
      : Error("simulation diverged at t=" + std::to_string(time) + " s"),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// The 2x2 mass matrix of the nonlinear cart-pendulum became singular.
class DegenerateConfigurationError : public Error {
 public:
  explicit DegenerateConfigurationError(double determinant)
      : Error("degenerate configuration: mass-matrix determinant " +
              std::to_string(determinant)),
        determinant_(determinant) {}
  double determinant() const { return determinant_; }

 private:
  double determinant_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class CapacityError : public Error {
 public:
  CapacityError(std::size_t required, std::size_t budget)
      : Error("table needs " + std::to_string(required) +
              " entries, budget is " + std::to_string(budget)),
        required_(required) {}
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch, double lambda)
      : Error(what + " at epoch " + std::to_string(epoch) + ", lambda " +
              std::to_string(lambda)),
        epoch_(epoch),
        lambda_(lambda) {}
  int epoch() const { return epoch_; }
  double lambda() const { return lambda_; }

 private:
  int epoch_;
  double lambda_;
};

// Bad configuration value; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace balance

#endif  // BALANCE_ERRORS_HPP_
