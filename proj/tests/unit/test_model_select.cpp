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
#include <random>

#include "cptkit/error.hpp"
#include "cptkit/model_select.hpp"

using namespace cptkit;

namespace {

const std::vector<double> kTemps{4, 6, 8, 10, 13, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34};

// Linear up to the sixth temperature, cubic growth beyond it.
ThermalSeries piecewise_series(std::uint64_t seed, double noise_hz = 10e6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise_hz);
  ThermalSeries s;
  const double knee = kTemps[5];
  for (double t : kTemps) {
    double y = 300e6 + 20e6 * t;
    if (t > knee) y += 1.4e5 * (t * t * t - knee * knee * knee);
    s.temperatures.push_back(t);
    s.linewidths.push_back(y + n(rng));
    s.linewidth_errors.push_back(noise_hz);
  }
  return s;
}

ThermalSeries exact(double (*f)(double), std::size_t n) {
  ThermalSeries s;
  for (std::size_t i = 0; i < n; ++i) {
    s.temperatures.push_back(kTemps[i]);
    s.linewidths.push_back(f(kTemps[i]));
  }
  return s;
}

}  // namespace

TEST_SUITE("model-select") {

TEST_CASE("series validation") {
  ThermalSeries s{{4, 3}, {1e8, 2e8}, {}};
  CHECK_THROWS_AS(s.validate(), BadInput);
  s = {{3, 4}, {1e8, -2e8}, {}};
  CHECK_THROWS_AS(s.validate(), BadInput);
  s = {{3, 4}, {1e8, 2e8}, {1.0}};
  CHECK_THROWS_AS(s.validate(), BadInput);
}

TEST_CASE("exact fits") {
  SUBCASE("two points, linear") {
    const ThermalSeries s{{4, 10}, {5e8, 8e8}, {}};
    const auto f = fit_thermal_model(s, ModelFamily::linear(), 2);
    CHECK(f.param("a") == doctest::Approx(5e7));
    CHECK(f.param("b") == doctest::Approx(3e8));
    CHECK(f.r_squared == doctest::Approx(1.0));
  }
  SUBCASE("anchored cubic with matching y0") {
    const auto s = exact([](double t) { return 2.5e5 * t * t * t + 4e8; }, 10);
    const auto f = fit_thermal_model(s, ModelFamily::cubic_anchored(4e8), 10);
    CHECK(f.param("a") == doctest::Approx(2.5e5).epsilon(1e-6));
    CHECK(f.constants.at("y0") == 4e8);
    CHECK(f.names.size() == 1);
  }
  SUBCASE("anchored cubic takes y0 from the linear intercept") {
    const auto s = piecewise_series(1);
    const auto lin = fit_thermal_model(s, ModelFamily::linear(), 8);
    const auto anchored = fit_thermal_model(s, ModelFamily::cubic_anchored(), 8);
    CHECK(anchored.constants.at("y0") == doctest::Approx(lin.param("b")).epsilon(1e-12));
  }
  SUBCASE("exact model data gives R^2 of one everywhere") {
    const auto s = exact([](double t) { return 1e8 + 3e7 * t; }, 15);
    for (double r : incremental_r2(s, ModelFamily::linear()).r2) {
      CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto c = exact([](double t) { return 1e8 + 3e4 * t * t * t; }, 15);
    for (double r : incremental_r2(c, ModelFamily::cubic()).r2) {
      CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("cubic extrapolates linear data worse than the line") {
    const auto s = exact([](double t) { return 1e8 + 3e7 * t; }, 15);
    const auto lin = fit_thermal_model(s, ModelFamily::linear(), 6);
    const auto cub = fit_thermal_model(s, ModelFamily::cubic(), 6);
    CHECK(r_squared(s.linewidths, cub.evaluate(s.temperatures)) <
          r_squared(s.linewidths, lin.evaluate(s.temperatures)));
  }
  CHECK_THROWS_AS(fit_thermal_model(exact([](double t) { return t; }, 5),
                                    ModelFamily::linear(), 1),
                  InsufficientPoints);
  CHECK_THROWS_AS(fit_thermal_model(exact([](double t) { return t; }, 5),
                                    ModelFamily::linear(), 6),
                  InsufficientPoints);
}

TEST_CASE("least squares optimum beats perturbed parameters") {
  const auto s = piecewise_series(9);
  for (auto family : {ModelFamily::linear(), ModelFamily::cubic(), ModelFamily::cubic_anchored()}) {
    const auto fit = fit_thermal_model(s, family, 10);
    const std::vector<double> x(s.temperatures.begin(), s.temperatures.begin() + 10);
    const std::vector<double> y(s.linewidths.begin(), s.linewidths.begin() + 10);
    for (const auto& name : fit.names) {
      for (double k : {0.9, 1.1}) {
        auto moved = fit;
        moved.params[name] *= k;
        CHECK(r_squared(y, moved.evaluate(x)) <= fit.r_squared);
      }
    }
  }
}

TEST_CASE("cutoff detection") {
  const std::vector<double> t{1, 2, 3, 4, 5, 6};
  SUBCASE("strictly increasing has no cutoff") {
    CHECK_FALSE(detect_cutoff({{3, 4, 5, 6}, {0.1, 0.2, 0.3, 0.4}}, t).has_value());
  }
  SUBCASE("plateau resolves to the earlier index") {
    const auto c = detect_cutoff({{3, 4, 5, 6}, {0.5, 0.9, 0.9, 0.7}}, t);
    REQUIRE(c.has_value());
    CHECK(c->index == 1);
    CHECK(c->n_points == 4);
    CHECK(c->temperature == 4.0);
  }
  SUBCASE("piecewise series peaks near the junction") {
    // Noise can plant an earlier maximum, so this is a rate, not a rule.
    int hits = 0;
    const int trials = 100;
    for (int seed = 1; seed <= trials; ++seed) {
      const auto s = piecewise_series(static_cast<std::uint64_t>(seed));
      const auto c = detect_cutoff(incremental_r2(s, ModelFamily::linear()), s.temperatures);
      if (c && c->n_points >= 5 && c->n_points <= 7) ++hits;
    }
    CHECK(hits >= 75);
  }
  SUBCASE("noise-free knee with a clean rise") {
    ThermalSeries s;
    for (std::size_t i = 0; i < kTemps.size(); ++i) {
      const double t = kTemps[i];
      // alternating offsets of shrinking relative size give a rising R^2
      double y = 300e6 + 20e6 * t + (i % 2 == 0 ? 8e6 : -8e6);
      if (t > 16) y += 1.4e5 * (t * t * t - 4096.0);
      s.temperatures.push_back(t);
      s.linewidths.push_back(y);
    }
    const auto c = detect_cutoff(incremental_r2(s, ModelFamily::linear()), s.temperatures);
    REQUIRE(c.has_value());
    CHECK(c->temperature == 16.0);
  }
  SUBCASE("scale invariance") {
    auto s = piecewise_series(4);
    const auto c1 = detect_cutoff(incremental_r2(s, ModelFamily::linear()), s.temperatures);
    for (double& y : s.linewidths) y *= 1e-6;
    const auto c2 = detect_cutoff(incremental_r2(s, ModelFamily::linear()), s.temperatures);
    REQUIRE(c1.has_value());
    REQUIRE(c2.has_value());
    CHECK(c1->index == c2->index);
  }
  CHECK_THROWS_AS(detect_cutoff({{3, 4}, {0.1, 0.2}}, t), InsufficientPoints);
}

TEST_CASE("out-of-sample R^2 uses the whole series") {
  const auto s = piecewise_series(2);
  const auto in = incremental_r2(s, ModelFamily::linear());
  const auto out = incremental_r2_out_of_sample(s, ModelFamily::linear());
  REQUIRE(in.r2.size() == out.r2.size());
  CHECK(out.r2.back() == doctest::Approx(in.r2.back()).epsilon(1e-12));
  CHECK(out.r2[2] < in.r2[2]);
}

TEST_CASE("total absolute error") {
  const auto s = exact([](double t) { return 1e8 + 3e7 * t; }, 8);
  const auto fit = fit_thermal_model(s, ModelFamily::linear(), 8);
  CHECK(total_abs_error(s, fit, first_indices(8)) < 1e-3);

  auto offset = fit;
  offset.params["b"] += 2e6;
  CHECK(total_abs_error(s, offset, first_indices(8)) == doctest::Approx(16e6).epsilon(1e-9));

  SUBCASE("translation covariance") {
    const auto noisy = piecewise_series(3);
    const auto f = fit_thermal_model(noisy, ModelFamily::cubic(), 15);
    auto moved = noisy;
    for (double& y : moved.linewidths) y += 7e6;
    const double e0 = total_abs_error(noisy, f, first_indices(15));
    const double e1 = total_abs_error(moved, f, first_indices(15));
    CHECK(std::abs(e1 - e0) <= 15 * 7e6 * (1 + 1e-12));
  }
  SUBCASE("anchored cubic on all points misses the linear regime") {
    const auto noisy = piecewise_series(5);
    const auto lin6 = fit_thermal_model(noisy, ModelFamily::linear(), 6);
    const auto anchored =
        fit_thermal_model(noisy, ModelFamily::cubic_anchored(lin6.param("b")), 15);
    CHECK(total_abs_error(noisy, anchored, first_indices(6)) >
          total_abs_error(noisy, lin6, first_indices(6)));
  }
  CHECK_THROWS_AS(total_abs_error(s, fit, {9}), BadInput);
}

}  // TEST_SUITE
