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


#include <doctest.h>

#include <cmath>

#include "cptkit/error.hpp"
#include "cptkit/nelder_mead.hpp"

using namespace cptkit;

TEST_SUITE("nelder-mead") {

TEST_CASE("quadratic bowl") {
  const Objective f = [](const Eigen::VectorXd& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0);
  };
  Eigen::VectorXd x0(2);
  x0 << 5.0, 5.0;
  const auto r = nelder_mead(f, x0, {1.0, 4000, 1e-10, 1e-20});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("rosenbrock in four dimensions") {
  const Objective f = [](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    }
    return s;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(4, -1.2);
  const auto r = nelder_mead(f, x0, {0.5, 40000, 1e-10, 1e-24});
  CHECK(r.value < 1e-12);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(r.x[i] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("non-finite values act as walls") {
  const Objective f = [](const Eigen::VectorXd& x) {
    if (x[0] < 0.5) return std::nan("");
    return (x[0] - 0.7) * (x[0] - 0.7);
  };
  Eigen::VectorXd x0(1);
  x0 << 2.0;
  const auto r = nelder_mead(f, x0, {0.3, 2000, 1e-10, 1e-20});
  CHECK(r.x[0] == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("evaluation budget is respected") {
  const Objective f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 10.0);
  const auto r = nelder_mead(f, x0, {1.0, 50, 1e-14, 1e-30});
  CHECK_FALSE(r.converged);
  CHECK(r.evaluations <= 50 + 4);
}

}  // TEST_SUITE
