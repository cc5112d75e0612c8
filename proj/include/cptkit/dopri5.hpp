// Copyright 2026 The cptkit Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "cptkit/error.hpp"

namespace cptkit {

struct Dopri5Options {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the derivative scale
  std::size_t max_steps = 20'000'000;
};

struct Dopri5Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Dormand-Prince 5(4) with PI step-size control (Hairer, Norsett & Wanner,
/// "Solving ODEs I", section II.4).
///
/// `State` is any Eigen column vector (real or complex). `rhs(t, y, dydt)`
/// writes the derivative; `observer(t, y)` is called at t0 and after every
/// accepted step and may return false to stop early. Integration always ends
/// exactly on `t_end` unless stopped.
template <typename State, typename Rhs, typename Observer>
Dopri5Stats integrate_dopri5(Rhs&& rhs, State& y, double t0, double t_end,
                             const Dopri5Options& opts, Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (error weights)
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0;
  constexpr double kAlpha = 0.7 / 5.0, kBeta = 0.04;

  Dopri5Stats stats;
  if (!(t_end > t0)) return stats;
  if (!observer(t0, y)) return stats;

  const auto n = y.size();
  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y_stage(n), y_new(n),
      err(n);

  auto error_norm = [&](const State& y_old, const State& y_next,
                        const State& e) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double scale =
          opts.atol +
          opts.rtol * std::max(std::abs(y_old[i]), std::abs(y_next[i]));
      const double r = std::abs(e[i]) / scale;
      sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(e.size()));
  };

  rhs(t0, y, k1);
  ++stats.rhs_evaluations;

  double h = opts.initial_step;
  if (h <= 0.0) {
    // Simple starting step (Hairer's algorithm, first stage only).
    double d0 = 0.0, d1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::abs(y[i]);
      d0 += std::pow(std::abs(y[i]) / sc, 2);
      d1 += std::pow(std::abs(k1[i]) / sc, 2);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * (t_end - t0) : 0.01 * d0 / d1;
  }
  h = std::min(h, t_end - t0);

  double t = t0;
  double err_prev = 1e-4;
  bool last_rejected = false;
  while (t < t_end) {
    if (stats.accepted + stats.rejected >= opts.max_steps) {
      throw NonConvergence("integrator exceeded " +
                           std::to_string(opts.max_steps) + " steps");
    }
    bool final_step = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }

    y_stage = y + h * (a21 * k1);
    rhs(t + c2 * h, y_stage, k2);
    y_stage = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, y_stage, k3);
    y_stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, y_stage, k4);
    y_stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, y_stage, k5);
    y_stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, y_stage, k6);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y_new, k7);
    stats.rhs_evaluations += 6;

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err_norm = error_norm(y, y_new, err);
    if (!std::isfinite(err_norm)) {
      throw NumericalInstability("non-finite local error estimate at t=" +
                                 std::to_string(t));
    }

    if (err_norm <= 1.0) {
      double factor =
          err_norm == 0.0
              ? kMaxFactor
              : kSafety * std::pow(err_norm, -kAlpha) * std::pow(err_prev, kBeta);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      if (last_rejected) factor = std::min(factor, 1.0);
      err_prev = std::max(err_norm, 1e-4);
      t = final_step ? t_end : t + h;
      y.swap(y_new);
      k1.swap(k7);  // first-same-as-last
      ++stats.accepted;
      last_rejected = false;
      if (!observer(t, y)) break;
      h *= factor;
    } else {
      const double factor =
          std::max(kMinFactor, kSafety * std::pow(err_norm, -kAlpha));
      h *= factor;
      ++stats.rejected;
      last_rejected = true;
    }
    if (t < t_end && h <= 1e-15 * std::max(std::abs(t), std::abs(t_end))) {
      throw NumericalInstability("step size underflow at t=" +
                                 std::to_string(t));
    }
  }
  return stats;
}

}  // namespace cptkit
