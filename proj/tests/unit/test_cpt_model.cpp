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

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "cptkit/cpt_model.hpp"
#include "cptkit/error.hpp"

using namespace cptkit;

namespace {

const OpticalRates kOptical = OpticalRates::from_lifetime(4.55e-9);

CptFitParams dataset(double omega_c_mhz, double omega_d_mhz, double t_minus_ps) {
  CptFitParams p;
  p.omega_c = two_pi_mhz(omega_c_mhz);
  p.omega_d = two_pi_mhz(omega_d_mhz);
  p.gamma_minus = 1.0 / (t_minus_ps * 1e-12);
  return p;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
  return v;
}

CptFitReport report_for(const CptFitParams& p, double tail_hz) {
  CptFitReport r;
  r.params = p;
  r.optical = kOptical;
  r.tail_detuning = tail_hz;
  return r;
}

double rho33(const CptFitParams& p, double delta_d_hz) {
  return excited_population(p, kOptical, delta_d_hz, SteadyStateOptions::direct());
}

CptFitOptions quick_fit() {
  CptFitOptions o;
  o.starts = 4;
  return o;
}

}  // namespace

TEST_SUITE("cpt-model") {

TEST_CASE("optical rates split by branching ratio") {
  const auto r = OpticalRates::from_lifetime(5e-9, 2.4);
  CHECK(r.gamma_c / r.gamma_d == doctest::Approx(2.4).epsilon(1e-14));
  CHECK(r.gamma_c + r.gamma_d == doctest::Approx(2e8).epsilon(1e-14));
  CHECK_THROWS_AS(OpticalRates::from_lifetime(0.0), BadInput);
  CHECK_THROWS_AS(OpticalRates::from_lifetime(1e-9, -1.0), BadInput);
}

TEST_CASE("gamma_plus is tied to gamma_minus") {
  const auto p = dataset(19.3, 164, 31);
  const double expected =
      std::exp(-6.62607015e-34 * 831e9 / (1.380649e-23 * 3.86));
  CHECK(p.gamma_plus() / p.gamma_minus == doctest::Approx(expected).epsilon(1e-12));
  const auto rates = p.system_rates(kOptical);
  CHECK(rates.gamma_plus == p.gamma_plus());
  CHECK(rates.gamma_c == kOptical.gamma_c);
  CHECK(rates.gamma_d_opt == kOptical.gamma_d);
}

TEST_CASE("spectrum points match the null-space oracle") {
  const auto p = dataset(22.9, 306, 26);
  const auto grid = linspace(-20e9, 20e9, 9);
  const auto direct = simulate_cpt_spectrum(p, kOptical, grid, SteadyStateOptions::direct());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    oracle::RawModel m;
    m.omega_c = p.omega_c;
    m.omega_d = p.omega_d;
    m.delta_d = 2.0 * std::numbers::pi * grid[i];
    m.g12 = p.gamma_plus();
    m.g21 = p.gamma_minus;
    m.g31 = kOptical.gamma_c;
    m.g32 = kOptical.gamma_d;
    const auto rho = oracle::nullspace_steady_state(m);
    CHECK(direct.values[i] == doctest::Approx(rho(2, 2).real()).epsilon(1e-9));
  }
  // the integrated default path on a few points
  const std::vector<double> few{-5e9, 0.0, 3e9};
  const auto integrated = simulate_cpt_spectrum(p, kOptical, few);
  CHECK(integrated.kind == SpectrumKind::Population);
  for (std::size_t i = 0; i < few.size(); ++i) {
    CHECK(integrated.values[i] == doctest::Approx(rho33(p, few[i])).epsilon(1e-6));
  }
}

TEST_CASE("spectrum is symmetric in the D detuning") {
  const auto p = dataset(20.1, 272, 32);
  for (double d : {1e8, 1.7e9, 4e9, 2.5e10}) {
    CHECK(rho33(p, d) == doctest::Approx(rho33(p, -d)).epsilon(1e-9));
  }
}

TEST_CASE("parameter effects on the dip") {
  const double tail = 60e9;
  SUBCASE("faster gamma_- never deepens the dip") {
    double previous = 1.0;
    for (double t_ps : {100.0, 60.0, 31.0, 15.0, 5.0, 1.0}) {
      const double v = dip_visibility(dataset(19.3, 164, t_ps), kOptical, tail);
      CHECK(v <= previous + 1e-12);
      previous = v;
    }
    CHECK(dip_visibility(dataset(19.3, 164, 1.0), kOptical, tail) < 0.02);
  }
  SUBCASE("stronger Omega_D widens and deepens the dip") {
    double prev_width = 0.0, prev_depth = 0.0;
    for (double od : {100.0, 164.0, 272.0, 400.0}) {
      const auto p = dataset(19.3, od, 31);
      const double width = estimate_dip_fwhm(p, kOptical);
      const double depth = rho33(p, tail) - rho33(p, 0.0);
      CHECK(width > prev_width);
      CHECK(depth > prev_depth);
      prev_width = width;
      prev_depth = depth;
    }
  }
  SUBCASE("stronger Omega_C raises the tail") {
    double previous = 0.0;
    for (double oc : {5.0, 10.0, 19.3, 40.0}) {
      const double v = rho33(dataset(oc, 164, 31), tail);
      CHECK(v > previous);
      previous = v;
    }
  }
}

TEST_CASE("a dip exists for strong D drive and fast relaxation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const double od = oracle::log_uniform(rng, 100.0, 600.0);
    const double oc = oracle::log_uniform(rng, 5.0, 60.0);
    const double t_ps = oracle::log_uniform(rng, 5.0, 40.0);
    const auto p = dataset(oc, od, t_ps);
    CAPTURE(od);
    CAPTURE(oc);
    CAPTURE(t_ps);
    CHECK(rho33(p, 0.0) < rho33(p, 50e9));
  }
}

TEST_CASE("dip width estimate and default grid") {
  const auto p = dataset(19.3, 164, 31);
  const double fwhm = estimate_dip_fwhm(p, kOptical);
  const double center = rho33(p, 0.0);
  const double tail = rho33(p, 50.0 * (p.gamma_minus + p.gamma_plus() + kOptical.gamma_c +
                                       kOptical.gamma_d) / (2.0 * std::numbers::pi));
  CHECK(rho33(p, 0.5 * fwhm) == doctest::Approx(0.5 * (center + tail)).epsilon(1e-5));
  CHECK(fwhm > 1e9);
  CHECK(fwhm < 2e10);

  const auto grid = default_detuning_grid(p, kOptical);
  REQUIRE(grid.size() == 201);
  CHECK(grid.front() == doctest::Approx(-6.0 * fwhm));
  CHECK(grid.back() == doctest::Approx(6.0 * fwhm));
  CHECK(grid[100] == 0.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK_THROWS_AS(default_detuning_grid(p, kOptical, 1), BadInput);
}

TEST_CASE("quadratic interpolation at zero detuning") {
  CptSpectrum s;
  s.detunings_d = {-3.0, -1.2, 0.7, 2.1, 4.0};
  for (double x : s.detunings_d) s.values.push_back(0.3 + 0.01 * x + 0.02 * x * x);
  CHECK(interpolate_at_zero(s) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("spectrum validation") {
  CptSpectrum s;
  s.detunings_d = {0.0, 1.0};
  s.values = {0.1};
  CHECK_THROWS_AS(s.validate(), BadInput);
  s.values = {0.1, -0.1};
  CHECK_THROWS_AS(s.validate(), BadInput);
  s.detunings_d = {1.0, 1.0};
  s.values = {0.1, 0.1};
  CHECK_THROWS_AS(s.validate(), BadInput);
}

TEST_CASE("fit rejects unusable input") {
  const auto p = dataset(19.3, 164, 31);
  auto spectrum = simulate_cpt_spectrum(p, kOptical, linspace(-3e10, 3e10, 9),
                                        SteadyStateOptions::direct());
  CHECK_THROWS_AS(fit_cpt(spectrum, kOptical, p, quick_fit()), BadInput);

  spectrum = simulate_cpt_spectrum(p, kOptical, linspace(-3e10, 3e10, 21),
                                   SteadyStateOptions::direct());
  spectrum.kind = SpectrumKind::Fluorescence;
  CHECK_THROWS_AS(fit_cpt(spectrum, kOptical, p, quick_fit()), BadInput);

  SUBCASE("flat spectrum from an undriven D transition") {
    CptFitParams flat = p;
    flat.omega_d = 0.0;
    auto s = simulate_cpt_spectrum(flat, kOptical, linspace(-3e10, 3e10, 21),
                                   SteadyStateOptions::direct());
    CHECK_THROWS_AS(fit_cpt(s, kOptical, p, quick_fit()), FitDiverged);
  }
}

TEST_CASE("noise-free round trip and idempotence") {
  const auto truth = dataset(20.1, 272, 32);
  const auto grid = default_detuning_grid(truth, kOptical, 41);
  const auto spectrum = simulate_cpt_spectrum(truth, kOptical, grid,
                                              SteadyStateOptions::direct());
  CptFitParams init = truth;
  init.omega_c *= 1.4;
  init.omega_d *= 0.6;
  init.gamma_minus *= 2.5;
  const auto report = fit_cpt(spectrum, kOptical, init, quick_fit());
  CHECK(report.params.omega_c == doctest::Approx(truth.omega_c).epsilon(0.02));
  CHECK(report.params.omega_d == doctest::Approx(truth.omega_d).epsilon(0.02));
  CHECK(report.params.gamma_minus == doctest::Approx(truth.gamma_minus).epsilon(0.02));
  CHECK(report.residual <= report.initial_residual);
  CHECK(report.t_plus / report.t_minus ==
        doctest::Approx(report.params.gamma_minus / report.params.gamma_plus())
            .epsilon(1e-12));
  CHECK(report.dip_population == doctest::Approx(rho33(report.params, 0.0)));
  CHECK(report.data_dip_population == doctest::Approx(spectrum.values[20]).epsilon(1e-9));
  CHECK(report.r_squared > 0.999999);
  CHECK(report.uncertainties.all_bounded());

  CptFitOptions again = quick_fit();
  again.starts = 1;
  const auto refit = fit_cpt(spectrum, kOptical, report.params, again);
  CHECK(refit.params.omega_c == doctest::Approx(report.params.omega_c).epsilon(1e-3));
  CHECK(refit.params.omega_d == doctest::Approx(report.params.omega_d).epsilon(1e-3));
  CHECK(refit.params.gamma_minus ==
        doctest::Approx(report.params.gamma_minus).epsilon(1e-3));
}

TEST_CASE("round trip with one percent noise") {
  const auto truth = dataset(19.3, 164, 31);
  const auto grid = default_detuning_grid(truth, kOptical, 101);
  auto spectrum = simulate_cpt_spectrum(truth, kOptical, grid, SteadyStateOptions::direct());
  std::mt19937_64 rng(11);
  const double sigma = 0.01 * spectrum.values.front();
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : spectrum.values) v = std::max(0.0, v + noise(rng));
  const auto report = fit_cpt(spectrum, kOptical, truth, quick_fit());
  CHECK(report.params.omega_c == doctest::Approx(truth.omega_c).epsilon(0.10));
  CHECK(report.params.omega_d == doctest::Approx(truth.omega_d).epsilon(0.10));
  CHECK(report.params.gamma_minus == doctest::Approx(truth.gamma_minus).epsilon(0.10));
}

TEST_CASE("sensitivity") {
  const auto r = report_for(dataset(22.9, 306, 26), 50e9);
  SUBCASE("larger fraction never gives a smaller uncertainty") {
    SensitivityReport previous;
    for (double fraction : {0.01, 0.02, 0.05, 0.1}) {
      const auto s = sensitivity(r, fraction);
      if (!previous.parameters.empty()) {
        for (std::size_t i = 0; i < s.parameters.size(); ++i) {
          CHECK(s.parameters[i].uncertainty >= previous.parameters[i].uncertainty);
        }
      }
      previous = s;
    }
  }
  SUBCASE("excursions land just past the threshold") {
    const auto s = sensitivity(r, 0.05);
    CptFitParams p = r.params;
    p.gamma_minus += s.at("gamma_minus").excursion_up;
    const double base = rho33(r.params, 0.0);
    CHECK(std::abs(rho33(p, 0.0) - base) / base > 0.05);
    p.gamma_minus = r.params.gamma_minus + s.at("gamma_minus").excursion_up / 1.05 -
                    r.params.gamma_minus * 0.05 / 1.05;
    CHECK(std::abs(rho33(p, 0.0) - base) / base <= 0.05);
    const auto& t = s.at("t_minus");
    CHECK(t.value == doctest::Approx(26e-12));
    CHECK(t.uncertainty / t.value > 0.1);
    CHECK(t.uncertainty / t.value < 10.0);
    CHECK(s.at("t_plus").uncertainty / s.at("t_plus").value ==
          doctest::Approx(t.uncertainty / t.value).epsilon(1e-9));
  }
  SUBCASE("a parameter without effect is unbounded") {
    auto degenerate = r;
    degenerate.params.omega_d = 2.0 * std::numbers::pi * 1.0;  // 1 Hz
    CHECK_THROWS_AS(sensitivity(degenerate, 0.05), UnboundedSensitivity);
    SensitivityOptions lenient;
    lenient.allow_unbounded = true;
    const auto s = sensitivity(degenerate, 0.05, lenient);
    CHECK_FALSE(s.at("omega_d").bounded);
    CHECK(std::isinf(s.at("omega_d").uncertainty));
    CHECK_FALSE(s.all_bounded());
  }
  SUBCASE("an impossible fraction is unbounded") {
    auto shallow = report_for(dataset(19.3, 100, 40), 50e9);
    CHECK_THROWS_AS(sensitivity(shallow, 1.0), UnboundedSensitivity);
  }
}

TEST_CASE("dephasing upper bound") {
  const auto r = report_for(dataset(20.1, 272, 32), 40e9);
  const auto b = dephasing_upper_bound(r);
  CHECK(b.baseline_visibility ==
        doctest::Approx(dip_visibility(r.params, kOptical, 40e9)).epsilon(1e-14));
  CHECK(std::isfinite(b.time));
  CHECK(b.time > 0.0);
  CHECK(b.relative_width <= 1e-3);
  CHECK(b.bound_visibility <= 0.95 * b.baseline_visibility);
  CptFitParams p = r.params;
  p.gamma_deph = b.gamma_deph * (1.0 - 2e-3);
  CHECK(dip_visibility(p, kOptical, 40e9) > 0.95 * b.baseline_visibility);

  const auto tighter = dephasing_upper_bound(r, 0.01);
  CHECK(tighter.time > b.time);

  auto dephased = r;
  dephased.params.gamma_deph = 1e9;
  CHECK_THROWS_AS(dephasing_upper_bound(dephased), BadInput);
}

}  // TEST_SUITE
