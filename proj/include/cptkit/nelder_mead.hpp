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

#include <cstddef>
#include <functional>

#include <Eigen/Core>

namespace cptkit {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  /// Edge length of the initial simplex, per coordinate (absolute).
  double initial_step = 0.1;
  std::size_t max_evaluations = 4000;
  /// Stop when every vertex is within x_tol of the best one (max norm)
  /// and the spread of values is within f_tol (absolute).
  double x_tol = 1e-9;
  double f_tol = 1e-18;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Downhill simplex with the dimension-adaptive coefficients of Gao & Han
/// (2012). Non-finite objective values are treated as +infinity.
MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& options = {});

}  // namespace cptkit
