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

#ifndef BALANCE_POLICY_NN_HPP_
#define BALANCE_POLICY_NN_HPP_

// State-feedback network distilled from a tabulated one-step cost.
//
// The state box and the action interval are gridded; every (action, state)
// cell holds F = X+' Q_nn X+ + R_nn u^2 with X+ the one-step prediction of
// the linear model. The cheapest action per state becomes a regression
// label for a 4-H-1 tanh network fitted with Levenberg-Marquardt.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "balance/control.hpp"
#include "balance/errors.hpp"
#include "balance/nlta.hpp"
#include "balance/plant.hpp"
#include "balance/trace.hpp"

namespace balance {

struct GridSpec {
  Vec4 x_min = -Vec4(0.175, 0.35, 0.1, 0.2);
  Vec4 x_max = Vec4(0.175, 0.35, 0.1, 0.2);
  std::array<int, 4> x_points = {21, 21, 21, 21};
  double u_min = -5.0;
  double u_max = 5.0;
  int u_points = 21;

  // Uniform grid with `points` nodes per axis on the given box.
  static GridSpec uniform(const Vec4& half_width, double u_half_width,
                          int points, int action_points) {
    GridSpec g;
    g.x_min = -half_width;
    g.x_max = half_width;
    g.x_points = {points, points, points, points};
    g.u_min = -u_half_width;
    g.u_max = u_half_width;
    g.u_points = action_points;
    return g;
  }

  void validate() const {
    for (int i = 0; i < 4; ++i) {
      if (x_points[i] < 1) throw ConfigError("grid.x_points", "must be >= 1");
      if (!(x_min[i] <= x_max[i]) || (x_points[i] > 1 && x_min[i] == x_max[i])) {
        throw ConfigError("grid.x_bounds", "need min < max");
      }
    }
    if (u_points < 1) throw ConfigError("grid.u_points", "must be >= 1");
    if (!(u_min <= u_max)) throw ConfigError("grid.u_bounds", "need min <= max");
  }

  std::size_t state_count() const {
    std::size_t n = 1;
    for (int p : x_points) n *= static_cast<std::size_t>(p);
    return n;
  }
  std::size_t action_count() const { return static_cast<std::size_t>(u_points); }

  // Node i of n on [lo, hi]. Written as a weighted mean so that a box
  // symmetric about zero yields exactly negated mirror nodes.
  static double node(double lo, double hi, int i, int n) {
    if (n == 1) return lo;
    return (lo * (n - 1 - i) + hi * i) / (n - 1);
  }

  double action(std::size_t a) const {
    return node(u_min, u_max, static_cast<int>(a), u_points);
  }

  // State columns enumerate axes in row-major order, theta slowest.
  std::array<int, 4> state_indices(std::size_t s) const {
    std::array<int, 4> idx{};
    for (int i = 3; i >= 0; --i) {
      idx[i] = static_cast<int>(s % static_cast<std::size_t>(x_points[i]));
      s /= static_cast<std::size_t>(x_points[i]);
    }
    return idx;
  }
  std::size_t state_column(const std::array<int, 4>& idx) const {
    std::size_t s = 0;
    for (int i = 0; i < 4; ++i) {
      s = s * static_cast<std::size_t>(x_points[i]) +
          static_cast<std::size_t>(idx[i]);
    }
    return s;
  }
  Vec4 state(std::size_t s) const {
    const auto idx = state_indices(s);
    Vec4 v;
    for (int i = 0; i < 4; ++i) {
      v[i] = node(x_min[i], x_max[i], idx[i], x_points[i]);
    }
    return v;
  }
};

struct NnCostWeights {
  Mat4 Q = Vec4(1.0, 1.0, 50.0, 25.0).asDiagonal();
  double R = 0.016;
};

inline constexpr double kDefaultNnStep = 0.01;

// F = X+' Q X+ + R u^2 with X+ = X + dt (A X + B u). Sums run in index order
// so that every caller gets the same rounding.
inline double one_step_cost(const Vec4& X, double u, const LinearModel& model,
                            double dt_nn, const Mat4& Q, double R) {
  double next[4];
  for (int i = 0; i < 4; ++i) {
    double dx = 0.0;
    for (int j = 0; j < 4; ++j) dx += model.A(i, j) * X[j];
    dx += model.B[i] * u;
    next[i] = X[i] + dt_nn * dx;
  }
  double cost = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) cost += next[i] * Q(i, j) * next[j];
  }
  return cost + R * u * u;
}

class QTable {
 public:
  QTable() = default;
  QTable(GridSpec grid, std::vector<double> costs)
      : grid_(std::move(grid)), costs_(std::move(costs)) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t actions() const { return grid_.action_count(); }
  std::size_t states() const { return grid_.state_count(); }
  double operator()(std::size_t a, std::size_t s) const {
    return costs_[a * states() + s];
  }
  const std::vector<double>& data() const { return costs_; }

 private:
  GridSpec grid_;
  std::vector<double> costs_;  // row-major, actions x states
};

inline constexpr std::size_t kDefaultQTableBudget = std::size_t{1} << 26;

inline QTable build_qtable(const GridSpec& grid, const LinearModel& model,
                           double dt_nn, const NnCostWeights& w,
                           std::size_t budget = kDefaultQTableBudget) {
  grid.validate();
  if (!(dt_nn > 0.0)) throw ConfigError("nn.dt", "must be > 0");
  const std::size_t n_s = grid.state_count(), n_a = grid.action_count();
  const std::size_t required = n_s * n_a;
  if (required > budget) throw CapacityError(required, budget);

  std::vector<double> costs(required);
  for (std::size_t s = 0; s < n_s; ++s) {
    const Vec4 X = grid.state(s);
    for (std::size_t a = 0; a < n_a; ++a) {
      costs[a * n_s + s] = one_step_cost(X, grid.action(a), model, dt_nn, w.Q, w.R);
    }
  }
  return QTable(grid, std::move(costs));
}

// Toy tables only: one line per cell.
inline void write_qtable_csv(std::ostream& os, const QTable& q,
                             std::size_t max_cells = 100000) {
  const std::size_t cells = q.actions() * q.states();
  if (cells > max_cells) throw CapacityError(cells, max_cells);
  os << "action,u,state,theta,theta_dot,x,x_dot,cost\n";
  for (std::size_t a = 0; a < q.actions(); ++a) {
    for (std::size_t s = 0; s < q.states(); ++s) {
      const Vec4 X = q.grid().state(s);
      os << a << ',' << format_double(q.grid().action(a)) << ',' << s;
      for (int i = 0; i < 4; ++i) os << ',' << format_double(X[i]);
      os << ',' << format_double(q(a, s)) << '\n';
    }
  }
}

struct PolicyDataset {
  Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> inputs;
  Eigen::VectorXd labels;

  std::size_t size() const { return static_cast<std::size_t>(labels.size()); }
};

// Cheapest action per state; ties go to the smaller |u|, then lower index.
inline PolicyDataset extract_policy(const QTable& q) {
  const std::size_t n_s = q.states(), n_a = q.actions();
  PolicyDataset d;
  d.inputs.resize(static_cast<Eigen::Index>(n_s), 4);
  d.labels.resize(static_cast<Eigen::Index>(n_s));
  for (std::size_t s = 0; s < n_s; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n_a; ++a) {
      const double c = q(a, s), cb = q(best, s);
      if (c < cb ||
          (c == cb && std::abs(q.grid().action(a)) < std::abs(q.grid().action(best)))) {
        best = a;
      }
    }
    d.inputs.row(static_cast<Eigen::Index>(s)) = q.grid().state(s).transpose();
    d.labels[static_cast<Eigen::Index>(s)] = q.grid().action(best);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Network

// 4 -> H (tanh) -> 1 (linear). Inputs are clamped to [in_lo, in_hi] and
// mapped to [-1, 1]; the output is out_offset + out_scale * y, clamped to
// [u_min, u_max].
struct PolicyNet {
  Eigen::MatrixXd W1;  // H x 4
  Eigen::VectorXd b1;  // H
  Eigen::RowVectorXd W2;  // 1 x H
  double b2 = 0.0;
  Vec4 in_lo = -Vec4::Ones();
  Vec4 in_hi = Vec4::Ones();
  double out_offset = 0.0;
  double out_scale = 1.0;
  double u_min = -5.0;
  double u_max = 5.0;

  static PolicyNet zeros(int hidden) {
    PolicyNet n;
    n.W1 = Eigen::MatrixXd::Zero(hidden, 4);
    n.b1 = Eigen::VectorXd::Zero(hidden);
    n.W2 = Eigen::RowVectorXd::Zero(hidden);
    return n;
  }

  int hidden() const { return static_cast<int>(b1.size()); }
  Eigen::Index parameter_count() const { return 6 * hidden() + 1; }

  Vec4 normalize(const Vec4& x) const {
    Vec4 z;
    for (int i = 0; i < 4; ++i) {
      const double span = in_hi[i] - in_lo[i];
      z[i] = span > 0.0 ? 2.0 * (x[i] - in_lo[i]) / span - 1.0 : 0.0;
    }
    return z;
  }

  // Network output on normalized inputs, before output scaling.
  double forward(const Vec4& z) const {
    double out = b2;
    for (Eigen::Index h = 0; h < b1.size(); ++h) {
      const double pre = W1(h, 0) * z[0] + W1(h, 1) * z[1] + W1(h, 2) * z[2] +
                         W1(h, 3) * z[3] + b1[h];
      out += W2[h] * std::tanh(pre);
    }
    return out;
  }

  // Parameters flattened as [W1 row-major, b1, W2, b2].
  Eigen::VectorXd parameters() const {
    const int H = hidden();
    Eigen::VectorXd p(parameter_count());
    for (int h = 0; h < H; ++h)
      for (int i = 0; i < 4; ++i) p[4 * h + i] = W1(h, i);
    p.segment(4 * H, H) = b1;
    p.segment(5 * H, H) = W2.transpose();
    p[6 * H] = b2;
    return p;
  }
  void set_parameters(const Eigen::VectorXd& p) {
    const int H = hidden();
    for (int h = 0; h < H; ++h)
      for (int i = 0; i < 4; ++i) W1(h, i) = p[4 * h + i];
    b1 = p.segment(4 * H, H);
    W2 = p.segment(5 * H, H).transpose();
    b2 = p[6 * H];
  }

  bool finite() const {
    return W1.allFinite() && b1.allFinite() && W2.allFinite() &&
           std::isfinite(b2) && in_lo.allFinite() && in_hi.allFinite() &&
           std::isfinite(out_offset) && std::isfinite(out_scale) &&
           out_scale != 0.0;
  }
};

inline double nn_feedback(const PolicyNet& net, const Vec4& state) {
  const Vec4 clamped = state.cwiseMax(net.in_lo).cwiseMin(net.in_hi);
  const double y = net.forward(net.normalize(clamped));
  const double u = net.out_offset + net.out_scale * y;
  if (!std::isfinite(u)) return 0.0;
  return std::clamp(u, net.u_min, net.u_max);
}

inline double nn_feedback(const PolicyNet& net, const StateVector& state) {
  return nn_feedback(net, state.values);
}

inline StateFeedback nn_state_feedback(
    PolicyNet net, FeedbackInput input = FeedbackInput::kTrackingError) {
  return {[n = std::move(net)](const Vec4& s) { return nn_feedback(n, s); },
          input};
}

// Output (pre-scaling) and its gradient with respect to the flattened
// parameters, for one normalized input.
inline double forward_with_gradient(const PolicyNet& net, const Vec4& z,
                                    Eigen::Ref<Eigen::VectorXd> grad) {
  const int H = net.hidden();
  double out = net.b2;
  for (int h = 0; h < H; ++h) {
    const double a = std::tanh(net.W1(h, 0) * z[0] + net.W1(h, 1) * z[1] +
                               net.W1(h, 2) * z[2] + net.W1(h, 3) * z[3] +
                               net.b1[h]);
    const double d = (1.0 - a * a) * net.W2[h];
    for (int i = 0; i < 4; ++i) grad[4 * h + i] = d * z[i];
    grad[4 * H + h] = d;
    grad[5 * H + h] = a;
    out += net.W2[h] * a;
  }
  grad[6 * H] = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt training

struct TrainOptions {
  int hidden = 13;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  std::uint64_t seed = 42;
  int max_epochs = 200;
  int max_validation_failures = 6;
  double lambda0 = 1e-3;
  double lambda_max = 1e10;
  double init_scale = 0.5;
  // Input normalization box; the dataset's per-axis range when unset.
  std::optional<std::pair<Vec4, Vec4>> input_box;
  double u_min = -5.0;
  double u_max = 5.0;
};

struct TrainReport {
  int epochs = 0;
  int best_epoch = 0;
  std::string stop_reason;
  double final_lambda = 0.0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double test_mse = 0.0;
  double label_variance = 0.0;
  std::size_t train_size = 0, validation_size = 0, test_size = 0;
  std::vector<double> train_mse_history;  // after each epoch

  double normalized_test_mse() const {
    return label_variance > 0.0 ? test_mse / label_variance : test_mse;
  }
};

struct TrainedPolicy {
  PolicyNet net;
  TrainReport report;
};

namespace detail {

inline double mse_on(const PolicyNet& net, const std::vector<Vec4>& z,
                     const Eigen::VectorXd& y,
                     const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t r : rows) {
    const double e = net.forward(z[r]) - y[static_cast<Eigen::Index>(r)];
    acc += e * e;
  }
  return acc / static_cast<double>(rows.size());
}

}  // namespace detail

// Minimizes training-split MSE with damping lambda on J'J: lambda / 10 after
// an accepted step, x10 after a rejected one. Stops after max_epochs, after
// max_validation_failures consecutive validation increases, or when no
// damping up to lambda_max reduces the loss. Returns the parameters with the
// best validation error.
inline TrainedPolicy train_policy_net(const PolicyDataset& data,
                                      const TrainOptions& opt = {}) {
  const std::size_t n = data.size();
  if (n == 0) throw ConfigError("dataset", "must be non-empty");
  if (opt.hidden < 1) throw ConfigError("hidden", "must be >= 1");

  PolicyNet net = PolicyNet::zeros(opt.hidden);
  if (opt.input_box) {
    net.in_lo = opt.input_box->first;
    net.in_hi = opt.input_box->second;
  } else {
    net.in_lo = data.inputs.colwise().minCoeff().transpose();
    net.in_hi = data.inputs.colwise().maxCoeff().transpose();
  }
  net.u_min = opt.u_min;
  net.u_max = opt.u_max;

  std::vector<Vec4> z(n);
  for (std::size_t r = 0; r < n; ++r) {
    z[r] = net.normalize(data.inputs.row(static_cast<Eigen::Index>(r)).transpose());
  }
  const Eigen::VectorXd& y = data.labels;

  // Split.
  Rng rng(opt.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(opt.train_fraction * n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::floor(opt.validation_fraction * n)));
  const std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  const std::vector<std::size_t> val(order.begin() + n_train,
                                     order.begin() + n_train + n_val);
  const std::vector<std::size_t> test(order.begin() + n_train + n_val, order.end());

  // Initial weights uniform in +-init_scale; output bias at the label mean.
  {
    Eigen::VectorXd p(net.parameter_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform(-opt.init_scale, opt.init_scale);
    }
    double mean = 0.0;
    for (std::size_t r : train) mean += y[static_cast<Eigen::Index>(r)];
    p[p.size() - 1] = mean / static_cast<double>(train.size());
    net.set_parameters(p);
  }

  TrainReport rep;
  rep.train_size = train.size();
  rep.validation_size = val.size();
  rep.test_size = test.size();
  rep.label_variance = (y.array() - y.mean()).square().mean();

  const Eigen::Index P = net.parameter_count();
  double lambda = opt.lambda0;
  double train_mse = detail::mse_on(net, z, y, train);
  double best_val = val.empty() ? train_mse : detail::mse_on(net, z, y, val);
  double prev_val = best_val;
  PolicyNet best = net;
  int failures = 0;
  rep.stop_reason = "max_epochs";

  Eigen::MatrixXd jtj(P, P);
  Eigen::VectorXd jte(P), grad(P);
  constexpr std::size_t kBlock = 2048;
  Eigen::MatrixXd jblock(static_cast<Eigen::Index>(kBlock), P);

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    jtj.setZero();
    jte.setZero();
    for (std::size_t start = 0; start < train.size(); start += kBlock) {
      const std::size_t len = std::min(kBlock, train.size() - start);
      Eigen::VectorXd eblock(static_cast<Eigen::Index>(len));
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t r = train[start + k];
        const double out = forward_with_gradient(net, z[r], grad);
        jblock.row(static_cast<Eigen::Index>(k)) = grad.transpose();
        eblock[static_cast<Eigen::Index>(k)] = out - y[static_cast<Eigen::Index>(r)];
      }
      const auto J = jblock.topRows(static_cast<Eigen::Index>(len));
      jtj.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
      jte.noalias() += J.transpose() * eblock;
    }
    jtj.triangularView<Eigen::StrictlyUpper>() = jtj.transpose();

    if (!std::isfinite(train_mse) || !jte.allFinite()) {
      throw TrainingError("non-finite loss", epoch, lambda);
    }

    const Eigen::VectorXd p0 = net.parameters();
    bool stepped = false;
    while (lambda <= opt.lambda_max) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
      const Eigen::VectorXd delta = ldlt.solve(-jte);
      if (ldlt.info() == Eigen::Success && delta.allFinite()) {
        net.set_parameters(p0 + delta);
        const double trial = detail::mse_on(net, z, y, train);
        if (std::isfinite(trial) && trial < train_mse) {
          train_mse = trial;
          lambda = std::max(lambda / 10.0, 1e-20);
          stepped = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      net.set_parameters(p0);
      rep.epochs = epoch - 1;
      rep.stop_reason = "lambda_max";
      break;
    }
    rep.epochs = epoch;
    rep.train_mse_history.push_back(train_mse);

    if (val.empty()) {
      best = net;
      rep.best_epoch = epoch;
      continue;
    }
    const double v = detail::mse_on(net, z, y, val);
    if (v <= best_val) {
      best_val = v;
      best = net;
      rep.best_epoch = epoch;
    }
    failures = v > prev_val ? failures + 1 : 0;
    prev_val = v;
    if (failures >= opt.max_validation_failures) {
      rep.stop_reason = "validation";
      break;
    }
    if (train_mse == 0.0) {
      rep.stop_reason = "zero_loss";
      break;
    }
  }

  rep.final_lambda = lambda;
  rep.train_mse = detail::mse_on(best, z, y, train);
  rep.validation_mse = detail::mse_on(best, z, y, val);
  rep.test_mse = detail::mse_on(best, z, y, test);
  return {best, rep};
}

// ---------------------------------------------------------------------------
// Binary format, little-endian:
//   char[8] "BALNNET\0", u32 version, u32 layer count (3), u32 sizes[3],
//   u8 activation per non-input layer (1 = tanh, 0 = linear), then f64:
//   in_lo[4], in_hi[4], out_offset, out_scale, u_min, u_max,
//   W1 (H x 4 row-major), b1[H], W2 (1 x H), b2.

inline constexpr char kPolicyMagic[8] = {'B', 'A', 'L', 'N', 'N', 'E', 'T', '\0'};
inline constexpr std::uint32_t kPolicyFormatVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::uint8_t>>;
  U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    os.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::uint8_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw Error("policy file truncated");
    bits |= static_cast<U>(static_cast<std::uint8_t>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_policy_net(std::ostream& os, const PolicyNet& net) {
  os.write(kPolicyMagic, sizeof kPolicyMagic);
  detail::put_le<std::uint32_t>(os, kPolicyFormatVersion);
  detail::put_le<std::uint32_t>(os, 3);
  detail::put_le<std::uint32_t>(os, 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden()));
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint8_t>(os, 1);
  detail::put_le<std::uint8_t>(os, 0);
  for (int i = 0; i < 4; ++i) detail::put_le<double>(os, net.in_lo[i]);
  for (int i = 0; i < 4; ++i) detail::put_le<double>(os, net.in_hi[i]);
  detail::put_le<double>(os, net.out_offset);
  detail::put_le<double>(os, net.out_scale);
  detail::put_le<double>(os, net.u_min);
  detail::put_le<double>(os, net.u_max);
  const Eigen::VectorXd p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) detail::put_le<double>(os, p[i]);
}

inline PolicyNet read_policy_net(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kPolicyMagic, sizeof magic) != 0) {
    throw Error("not a policy network file");
  }
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kPolicyFormatVersion) {
    throw Error("unsupported policy format version " + std::to_string(version));
  }
  const auto layers = detail::get_le<std::uint32_t>(is);
  if (layers != 3) throw Error("policy file: expected 3 layers");
  const auto n_in = detail::get_le<std::uint32_t>(is);
  const auto n_hidden = detail::get_le<std::uint32_t>(is);
  const auto n_out = detail::get_le<std::uint32_t>(is);
  if (n_in != 4 || n_out != 1 || n_hidden == 0 || n_hidden > 1u << 20) {
    throw Error("policy file: unsupported layer sizes");
  }
  const auto act_hidden = detail::get_le<std::uint8_t>(is);
  const auto act_out = detail::get_le<std::uint8_t>(is);
  if (act_hidden != 1 || act_out != 0) {
    throw Error("policy file: unsupported activations");
  }
  PolicyNet net = PolicyNet::zeros(static_cast<int>(n_hidden));
  for (int i = 0; i < 4; ++i) net.in_lo[i] = detail::get_le<double>(is);
  for (int i = 0; i < 4; ++i) net.in_hi[i] = detail::get_le<double>(is);
  net.out_offset = detail::get_le<double>(is);
  net.out_scale = detail::get_le<double>(is);
  net.u_min = detail::get_le<double>(is);
  net.u_max = detail::get_le<double>(is);
  Eigen::VectorXd p(net.parameter_count());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = detail::get_le<double>(is);
  net.set_parameters(p);
  if (!net.finite()) throw Error("policy file: non-finite parameters");
  return net;
}

inline void write_policy_net(const std::string& path, const PolicyNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_policy_net(os, net);
}

inline PolicyNet read_policy_net(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_policy_net(is);
}

}  // namespace balance

#endif  // BALANCE_POLICY_NN_HPP_
