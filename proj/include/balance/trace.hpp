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

#ifndef BALANCE_TRACE_HPP_
#define BALANCE_TRACE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "balance/errors.hpp"
#include "balance/plant.hpp"

namespace balance {

// Time-indexed record of one closed-loop run, stored column-wise.
// Row k holds the state at t[k] and the control computed from it.
struct SimTrace {
  std::vector<double> t;
  std::vector<double> theta, theta_dot, x, x_dot;
  std::vector<double> u, u_pid, u_fb;
  std::vector<double> theta_ref, x_ref;

  static constexpr const char* kCsvHeader =
      "t,theta,theta_dot,x,x_dot,u,u_pid,u_fb,theta_ref,x_ref";

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }

  void reserve(std::size_t n) {
    for (auto* col : columns()) col->reserve(n);
  }

  void push(double time, const Vec4& s, double u_total, double u_pid_part,
            double u_fb_part, double th_ref, double xr) {
    t.push_back(time);
    theta.push_back(s[kTheta]);
    theta_dot.push_back(s[kThetaDot]);
    x.push_back(s[kX]);
    x_dot.push_back(s[kXDot]);
    u.push_back(u_total);
    u_pid.push_back(u_pid_part);
    u_fb.push_back(u_fb_part);
    theta_ref.push_back(th_ref);
    x_ref.push_back(xr);
  }

  Vec4 state(std::size_t k) const {
    return Vec4(theta[k], theta_dot[k], x[k], x_dot[k]);
  }

  // State relative to the commanded operating point (theta_ref, 0, x_ref, 0).
  Vec4 tracking_state(std::size_t k) const {
    return Vec4(theta[k] - theta_ref[k], theta_dot[k], x[k] - x_ref[k],
                x_dot[k]);
  }

  double error_theta(std::size_t k) const { return theta_ref[k] - theta[k]; }
  double error_x(std::size_t k) const { return x_ref[k] - x[k]; }

  std::vector<std::vector<double>*> columns() {
    return {&t, &theta, &theta_dot, &x, &x_dot, &u, &u_pid, &u_fb, &theta_ref,
            &x_ref};
  }
  std::vector<const std::vector<double>*> columns() const {
    return {&t, &theta, &theta_dot, &x, &x_dot, &u, &u_pid, &u_fb, &theta_ref,
            &x_ref};
  }

  bool operator==(const SimTrace&) const = default;
};

// 17 significant digits round-trips every double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << SimTrace::kCsvHeader << '\n';
  const auto cols = trace.columns();
  for (std::size_t k = 0; k < trace.size(); ++k) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) os << ',';
      os << format_double((*cols[c])[k]);
    }
    os << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_trace_csv(os, trace);
}

inline SimTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != SimTrace::kCsvHeader) {
    throw Error("trace CSV: unexpected header");
  }
  SimTrace trace;
  auto cols = trace.columns();
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++row;
    std::size_t c = 0;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p || c >= cols.size()) {
        throw Error("trace CSV: malformed row " + std::to_string(row));
      }
      cols[c++]->push_back(v);
      if (*end == '\0') break;
      if (*end != ',') {
        throw Error("trace CSV: malformed row " + std::to_string(row));
      }
      p = end + 1;
    }
    if (c != cols.size()) {
      throw Error("trace CSV: row " + std::to_string(row) + " has " +
                  std::to_string(c) + " fields");
    }
  }
  return trace;
}

inline SimTrace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_trace_csv(is);
}

}  // namespace balance

#endif  // BALANCE_TRACE_HPP_
