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

#include "cptkit/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace cptkit {

MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& options) {
  const auto n = x0.size();
  const double dim = static_cast<double>(n);
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / dim;
  const double rho = 0.75 - 1.0 / (2.0 * dim);
  const double sigma = 1.0 - 1.0 / dim;

  MinimizeResult result;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
    values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      s[i] = simplex[order[i]];
      v[i] = values[order[i]];
    }
    simplex.swap(s);
    values.swap(v);
  };

  while (true) {
    sort_simplex();
    double spread_x = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      spread_x = std::max(spread_x, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    const double spread_f = values.back() - values.front();
    if (spread_x <= options.x_tol && spread_f <= options.f_tol) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= dim;
    const Eigen::VectorXd& worst = simplex.back();

    const Eigen::VectorXd reflected = centroid + alpha * (centroid - worst);
    const double f_reflected = eval(reflected);
    if (f_reflected < values.front()) {
      const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex.back() = expanded;
        values.back() = f_expanded;
      } else {
        simplex.back() = reflected;
        values.back() = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[n - 1]) {
      simplex.back() = reflected;
      values.back() = f_reflected;
      continue;
    }
    // contraction, outside or inside
    const bool outside = f_reflected < values.back();
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + rho * (reflected - centroid))
                : Eigen::VectorXd(centroid + rho * (worst - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values.back())) {
      simplex.back() = contracted;
      values.back() = f_contracted;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 1; i < simplex.size(); ++i) {
      simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0]);
      values[i] = eval(simplex[i]);
    }
  }

  result.x = simplex.front();
  result.value = values.front();
  return result;
}

}  // namespace cptkit
