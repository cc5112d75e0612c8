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

#include "cptkit/cpt_model.hpp"
#include "cptkit/curvefit.hpp"
#include "cptkit/error.hpp"

using namespace cptkit;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
  return v;
}

template <class F>
Curve1D sample(const std::vector<double>& x, F f) {
  Curve1D c;
  c.x = x;
  for (double v : x) c.y.push_back(f(v));
  return c;
}

Curve1D with_noise(Curve1D c, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (double& v : c.y) v += n(rng);
  return c;
}

Curve1D scaled(Curve1D c, double k) {
  for (double& v : c.y) v *= k;
  if (c.y_err)
    for (double& v : *c.y_err) v *= k;
  return c;
}

Curve1D shifted(Curve1D c, double a) {
  for (double& v : c.x) v += a;
  return c;
}

}  // namespace

TEST_SUITE("curvefit") {

TEST_CASE("model functions at special points") {
  CHECK(lorentzian(0.3, 2.0, 1.0, 0.3, 0.5) == doctest::Approx(2.5));
  CHECK(lorentzian(0.8, 2.0, 1.0, 0.3, 0.0) == doctest::Approx(1.0));
  CHECK(saturation_curve(100e-9, 30.0, 100e-9, 0.5) == doctest::Approx(15.5));
  CHECK(saturation_curve(1e3, 30.0, 100e-9, 0.5) == doctest::Approx(30.5).epsilon(1e-9));
  CHECK(g2_model(2.0, 0.9, 0.4, 1.0, 10.0, 2.0) == doctest::Approx(1.0 - 0.81).epsilon(1e-15));
  CHECK(g2_model(1e6, 0.9, 0.4, 1.0, 10.0, 2.0) == doctest::Approx(1.0));
  CHECK(g2_model(3.7, 0.0, 0.4, 1.0, 10.0, 2.0) == 1.0);
  CHECK(inverted_gaussian(1.0, 0.2, 0.5, 1.0, 1.0) == doctest::Approx(0.8));
}

TEST_CASE("r squared") {
  CHECK(r_squared({1, 2, 3}, {1, 2, 4}) == doctest::Approx(0.5));
  CHECK(r_squared({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(r_squared({1, 2, 3}, {2, 2, 2}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(r_squared({4, 4, 4}, {4, 4, 4}), ZeroVariance);
  CHECK_THROWS_AS(r_squared({1, 2}, {1}), BadInput);
}

TEST_CASE("curve validation") {
  Curve1D c{{0, 1, 1}, {1, 2, 3}, std::nullopt};
  CHECK_THROWS_AS(c.validate(), BadInput);
  c.x = {0, 1, 2};
  c.y_err = std::vector<double>{1, 0, 1};
  CHECK_THROWS_AS(c.validate(), BadInput);
  CHECK_THROWS_AS(fit_lorentzian({{0, 1, 2, 3}, {0, 1, 0, 0}, std::nullopt}),
                  InsufficientPoints);
}

TEST_CASE("lorentzian") {
  const double g = 5.406e9;
  const auto data = sample(linspace(-30e9, 30e9, 121),
                           [&](double x) { return lorentzian(x, 1.0, g, 0.0, 0.0); });
  const auto r = fit_lorentzian(data);
  CHECK(*r.fwhm == doctest::Approx(g).epsilon(1e-6));
  CHECK(r.param("amplitude") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.param("center")) < 1e-6 * g);
  CHECK(r.r_squared == doctest::Approx(1.0));

  SUBCASE("off-center peak on a background") {
    const auto d = sample(linspace(-5e9, 25e9, 80), [&](double x) {
      return lorentzian(x, 3.2e4, 1.1e9, 7.3e9, 800.0);
    });
    const auto f = fit_lorentzian(d);
    CHECK(f.param("center") == doctest::Approx(7.3e9).epsilon(1e-8));
    CHECK(f.param("background") == doctest::Approx(800.0).epsilon(1e-6));
    CHECK(*f.fwhm == doctest::Approx(1.1e9).epsilon(1e-6));
  }
  SUBCASE("noisy data gives finite positive errors") {
    const auto noisy = with_noise(data, 0.01, 3);
    const auto f = fit_lorentzian(noisy);
    for (const auto& name : f.names) {
      CHECK(f.error(name) > 0.0);
      CHECK(std::isfinite(f.error(name)));
    }
    CHECK(*f.fwhm == doctest::Approx(g).epsilon(0.05));
  }
  SUBCASE("pure noise is flagged or rejected") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(10.0, 1.0);
    Curve1D noise;
    noise.x = linspace(0, 1, 60);
    for (std::size_t i = 0; i < 60; ++i) noise.y.push_back(n(rng));
    try {
      const auto f = fit_lorentzian(noise);
      CHECK(f.r_squared < 0.5);
    } catch (const FitDiverged&) {
      CHECK(true);
    }
  }
}

TEST_CASE("equivariance") {
  auto base = with_noise(sample(linspace(-10, 10, 61),
                                [](double x) { return lorentzian(x, 5.0, 2.0, 0.7, 1.0); }),
                         0.05, 5);
  base.y_err = std::vector<double>(base.y.size(), 0.05);
  const auto r = fit_lorentzian(base);
  const auto rs = fit_lorentzian(scaled(base, 1e4));
  CHECK(rs.param("amplitude") == doctest::Approx(1e4 * r.param("amplitude")).epsilon(1e-8));
  CHECK(rs.param("background") == doctest::Approx(1e4 * r.param("background")).epsilon(1e-8));
  CHECK(rs.param("fwhm") == doctest::Approx(r.param("fwhm")).epsilon(1e-8));
  CHECK(rs.param("center") == doctest::Approx(r.param("center")).epsilon(1e-8));
  CHECK(rs.error("amplitude") == doctest::Approx(1e4 * r.error("amplitude")).epsilon(1e-6));

  const auto rx = fit_lorentzian(shifted(base, 123.0));
  CHECK(rx.param("center") == doctest::Approx(r.param("center") + 123.0).epsilon(1e-10));
  CHECK(rx.param("fwhm") == doctest::Approx(r.param("fwhm")).epsilon(1e-7));

  const auto e = sample(linspace(0, 40e-9, 80),
                        [](double t) { return exponential_decay(t, 900.0, 5e-9, 12.0); });
  const auto re = fit_exponential_lifetime(with_noise(e, 2.0, 8));
  const auto re_s = fit_exponential_lifetime(scaled(with_noise(e, 2.0, 8), 0.01));
  CHECK(re_s.param("tau") == doctest::Approx(re.param("tau")).epsilon(1e-8));
  CHECK(re_s.param("amplitude") == doctest::Approx(0.01 * re.param("amplitude")).epsilon(1e-8));
}

TEST_CASE("weights change the solution only through y_err") {
  auto d = with_noise(sample(linspace(-10, 10, 41),
                             [](double x) { return lorentzian(x, 5.0, 2.0, 0.0, 1.0); }),
                      0.2, 21);
  const auto plain = fit_lorentzian(d);
  d.y_err = std::vector<double>(d.y.size(), 0.7);
  const auto uniform = fit_lorentzian(d);
  CHECK(uniform.param("fwhm") == doctest::Approx(plain.param("fwhm")).epsilon(1e-8));
  for (std::size_t i = 0; i < d.y.size(); ++i) (*d.y_err)[i] = 0.1 + 0.05 * i;
  const auto weighted = fit_lorentzian(d);
  CHECK(weighted.param("fwhm") != doctest::Approx(plain.param("fwhm")).epsilon(1e-8));
  CurveFitOptions off;
  off.use_weights = false;
  CHECK(fit_lorentzian(d, off).param("fwhm") ==
        doctest::Approx(plain.param("fwhm")).epsilon(1e-10));
}

TEST_CASE("double lorentzian") {
  const auto x = linspace(-20e9, 20e9, 201);
  SUBCASE("well separated peaks") {
    const auto d = sample(x, [](double v) {
      return lorentzian(v, 1.0, 2e9, -6e9, 0.0) + lorentzian(v, 0.6, 3e9, 5e9, 0.1);
    });
    const auto r = fit_double_lorentzian(d);
    CHECK(r.param("center_1") == doctest::Approx(-6e9).epsilon(0.01));
    CHECK(r.param("center_2") == doctest::Approx(5e9).epsilon(0.01));
    CHECK(r.param("fwhm_1") == doctest::Approx(2e9).epsilon(0.01));
    CHECK(r.param("fwhm_2") == doctest::Approx(3e9).epsilon(0.01));
    CHECK(r.param("amplitude_2") == doctest::Approx(0.6).epsilon(0.01));
    CHECK(*r.fwhm == doctest::Approx(2.5e9).epsilon(0.01));
    CHECK(r.derived.at("fwhm_mean") == *r.fwhm);
    CHECK(r.flags.empty());
  }
  SUBCASE("identical centers") {
    const auto d = sample(x, [](double v) {
      return lorentzian(v, 1.0, 2e9, 1e9, 0.0) + lorentzian(v, 1.0, 2e9, 1e9, 0.0);
    });
    const auto r = fit_double_lorentzian(d);
    CHECK(r.has_flag(kFlagDegenerateComponents));
    CHECK(r.model == LineModel::Lorentzian);
    CHECK(*r.fwhm == doctest::Approx(2e9).epsilon(1e-6));
    CurveFitOptions strict;
    strict.strict_degenerate = true;
    CHECK_THROWS_AS(fit_double_lorentzian(d, strict), DegenerateComponents);
  }
  SUBCASE("one component switched off") {
    const auto d = with_noise(
        sample(x, [](double v) { return lorentzian(v, 1.0, 2e9, -3e9, 0.05); }), 0.005, 4);
    const auto r = fit_double_lorentzian(d);
    CHECK((r.has_flag(kFlagUnconstrainedComponent) ||
           r.has_flag(kFlagDegenerateComponents)));
  }
}

TEST_CASE("gaussian prefit") {
  const auto x = linspace(-5.0, 7.0, 97);
  const auto dip = sample(x, [](double v) { return inverted_gaussian(v, 0.3, 1.2, 1.0, 2.0); });
  CHECK(fit_gaussian_prefit(dip) == doctest::Approx(1.0).epsilon(1e-8));

  const auto mono = sample(x, [](double v) { return 1.0 + 0.1 * v; });
  CHECK_THROWS_AS(fit_gaussian_prefit(mono), FitDiverged);

  SUBCASE("simulated CPT dip") {
    CptFitParams p;
    p.omega_c = two_pi_mhz(19.3);
    p.omega_d = two_pi_mhz(164);
    p.gamma_minus = 1.0 / 31e-12;
    const auto optical = OpticalRates::from_lifetime(4.55e-9);
    const double fwhm = estimate_dip_fwhm(p, optical);
    const auto grid = linspace(-4.0 * fwhm + 0.3e9, 4.0 * fwhm + 0.3e9, 121);
    const auto s = simulate_cpt_spectrum(p, optical, grid, SteadyStateOptions::direct());
    const double center = fit_gaussian_prefit({s.detunings_d, s.values, std::nullopt});
    CHECK(std::abs(center) < 0.02 * fwhm);
  }
}

TEST_CASE("exponential lifetime") {
  const auto x = linspace(0.0, 40e-9, 200);
  const auto d = sample(x, [](double t) { return exponential_decay(t, 1000.0, 5e-9, 3.0); });
  const auto r = fit_exponential_lifetime(d);
  CHECK(r.param("tau") == doctest::Approx(5e-9).epsilon(1e-6));
  CHECK(r.param("background") == doctest::Approx(3.0).epsilon(1e-6));

  const auto lifetime_limited = sample(x, [](double t) {
    return exponential_decay(t, 1.0, 4.55e-9, 0.0);
  });
  CHECK(fit_exponential_lifetime(lifetime_limited).derived.at("homogeneous_linewidth") ==
        doctest::Approx(35e6).epsilon(0.01));

  const auto flat = sample(x, [](double) { return 42.0; });
  CHECK_THROWS_AS(fit_exponential_lifetime(flat), FitDiverged);
}

TEST_CASE("saturation") {
  const std::vector<double> powers{5e-9, 10e-9, 20e-9, 50e-9, 100e-9, 200e-9, 500e-9, 1e-6};
  const auto d = sample(powers, [](double p) { return saturation_curve(p, 30.0, 100e-9, 0.5); });
  const auto r = fit_saturation(d);
  CHECK(r.param("f_sat") == doctest::Approx(30.0).epsilon(1e-6));
  CHECK(r.param("p_sat") == doctest::Approx(100e-9).epsilon(1e-6));
  CHECK(r.constants.at("background") == 0.5);
  CHECK(r.evaluate({100e-9})[0] == doctest::Approx(15.5).epsilon(1e-6));
  CHECK_THROWS_AS(fit_saturation({{1e-9, 2e-9}, {1, 2}, std::nullopt}), InsufficientPoints);
}

TEST_CASE("g2") {
  const auto x = linspace(-100e-9, 100e-9, 401);
  const auto d = sample(x, [](double t) { return g2_model(t, 0.92, 0.35, 3e-9, 40e-9, 1.5e-9); });
  const auto r = fit_g2(d);
  CHECK(r.param("p") == doctest::Approx(0.92).epsilon(1e-6));
  CHECK(r.param("c") == doctest::Approx(0.35).epsilon(1e-6));
  CHECK(r.param("tau_a") == doctest::Approx(3e-9).epsilon(1e-6));
  CHECK(r.param("tau_b") == doctest::Approx(40e-9).epsilon(1e-6));
  CHECK(r.param("offset") == doctest::Approx(1.5e-9).epsilon(1e-6));
  const double p = r.param("p");
  CHECK(r.derived.at("g2_zero") == doctest::Approx(1.0 - p * p).epsilon(1e-12));
  CHECK(r.evaluate({r.param("offset")})[0] ==
        doctest::Approx(r.derived.at("g2_zero")).epsilon(1e-9));
}

TEST_CASE("refitting sampled fits reproduces parameters") {
  const auto x = linspace(-10.0, 10.0, 81);
  const auto noisy = with_noise(
      sample(x, [](double v) { return lorentzian(v, 2.0, 3.0, 0.4, 0.2); }), 0.05, 77);
  const auto first = fit_lorentzian(noisy);
  const auto again = fit_lorentzian({x, first.evaluate(x), std::nullopt});
  for (const auto& name : first.names) {
    CHECK(again.param(name) == doctest::Approx(first.param(name)).epsilon(1e-3));
  }
  const auto t = linspace(0.0, 50.0, 60);
  const auto decay = with_noise(
      sample(t, [](double v) { return exponential_decay(v, 10.0, 7.0, 1.0); }), 0.1, 78);
  const auto e1 = fit_exponential_lifetime(decay);
  const auto e2 = fit_exponential_lifetime({t, e1.evaluate(t), std::nullopt});
  for (const auto& name : e1.names) {
    CHECK(e2.param(name) == doctest::Approx(e1.param(name)).epsilon(1e-3));
  }
}

}  // TEST_SUITE
