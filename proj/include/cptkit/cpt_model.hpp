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

// CPT dip spectra of the lambda system with the C laser on resonance and the
// D laser scanned, plus the three-parameter dip fit (Omega_C, Omega_D,
// gamma_-) with gamma_+ tied to gamma_- by detailed balance.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cptkit/nelder_mead.hpp"
#include "cptkit/quantum.hpp"
#include "cptkit/thermalization.hpp"
#include "cptkit/units.hpp"

namespace cptkit {

enum class SpectrumKind { Population, Fluorescence };

struct CptSpectrum {
  std::vector<double> detunings_d;  // Hz, D detuning relative to resonance
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::Population;

  /// Strictly increasing detunings, matching lengths, non-negative values.
  void validate() const;
};

/// Optical decay rates out of |3>, held fixed during fits.
struct OpticalRates {
  double gamma_c = 0.0;  // 3 -> 1, 1/s
  double gamma_d = 0.0;  // 3 -> 2, 1/s

  /// Splits 1/tau_se by the C:D branching ratio.
  static OpticalRates from_lifetime(double tau_se, double branch_ratio = 2.4);
};

inline constexpr double kDefaultDelta12 = 831e9;     // Hz
inline constexpr double kDefaultTemperature = 3.86;  // K

struct CptFitParams {
  double omega_c = 0.0;      // rad/s, free
  double omega_d = 0.0;      // rad/s, free
  double gamma_minus = 0.0;  // 1/s, free
  double gamma_deph = 0.0;   // 1/s, fixed
  double delta_12 = kDefaultDelta12;
  double temperature = kDefaultTemperature;
  PhysicalConstants constants{};

  double gamma_plus() const {
    return boltzmann_gamma_plus(gamma_minus, delta_12, temperature, constants);
  }
  SystemRates system_rates(const OpticalRates& optical) const;
};

/// Steady-state rho_33 for one D detuning (Hz); the C laser sits on
/// resonance.
double excited_population(const CptFitParams& params,
                          const OpticalRates& optical, double delta_d_hz,
                          const SteadyStateOptions& solver = {});

CptSpectrum simulate_cpt_spectrum(const CptFitParams& params,
                                  const OpticalRates& optical,
                                  const std::vector<double>& grid_hz,
                                  const SteadyStateOptions& solver = {});

/// Full width (Hz) of the dip at half depth, located by bisection on the
/// model. Falls back to (gamma_- + gamma_C + gamma_D) / 2pi without a dip.
double estimate_dip_fwhm(const CptFitParams& params,
                         const OpticalRates& optical);

/// `points` uniformly spaced detunings spanning +-span_fwhm dip widths.
std::vector<double> default_detuning_grid(const CptFitParams& params,
                                          const OpticalRates& optical,
                                          std::size_t points = 201,
                                          double span_fwhm = 6.0);

/// Data value at zero detuning from a parabola through the grid point
/// nearest zero and its two neighbours.
double interpolate_at_zero(const CptSpectrum& spectrum);

struct ParameterSensitivity {
  std::string name;
  double value = 0.0;
  double uncertainty = std::numeric_limits<double>::infinity();
  double excursion_up = std::numeric_limits<double>::infinity();
  double excursion_down = std::numeric_limits<double>::infinity();
  bool bounded = false;
};

struct SensitivityReport {
  double fraction = 0.05;
  /// omega_c, omega_d, gamma_minus, then the derived t_minus and t_plus.
  std::vector<ParameterSensitivity> parameters;

  const ParameterSensitivity& at(const std::string& name) const;
  bool all_bounded() const;
};

struct CptFitReport {
  CptFitParams params;
  OpticalRates optical;
  double t_plus = 0.0;   // s
  double t_minus = 0.0;  // s
  SensitivityReport uncertainties;
  double residual = 0.0;          // sum of squared errors
  double initial_residual = 0.0;  // at the user's initial guess
  double r_squared = 0.0;
  double dip_population = 0.0;       // model rho_33 at two-photon resonance
  double data_dip_population = 0.0;  // interpolated from the data
  double tail_detuning = 0.0;        // Hz, grid point farthest from zero
  std::size_t points = 0;
  std::size_t evaluations = 0;
  std::size_t starts = 0;
  std::vector<double> fitted_values;
};

struct CptFitOptions {
  std::size_t starts = 20;
  std::uint64_t seed = 20240917;
  double gamma_minus_min = 1.0 / 100e-12;
  double gamma_minus_max = 1.0 / 5e-12;
  /// Random starts draw each Rabi frequency log-uniformly within this
  /// factor of the initial guess.
  double omega_spread = 10.0;
  NelderMeadOptions simplex{0.1, 1500, 1e-7, 1e-20};
  /// Steady states inside the objective.
  SteadyStateOptions solver = SteadyStateOptions::direct();
  double sensitivity_fraction = 0.05;
  /// Minimum relative dip depth the data must show.
  double min_visibility = 1e-3;
};

/// Multistart simplex fit of (Omega_C, Omega_D, gamma_-) in log space,
/// minimizing the sum of squared population residuals.
CptFitReport fit_cpt(const CptSpectrum& spectrum, const OpticalRates& optical,
                     const CptFitParams& init, const CptFitOptions& options = {});

struct SensitivityOptions {
  double step_factor = 1.05;
  double max_decades = 3.0;
  /// When false, any unbounded parameter raises UnboundedSensitivity.
  bool allow_unbounded = false;
  SteadyStateOptions solver = SteadyStateOptions::direct();
};

/// Steps each fitted parameter multiplicatively in both directions until
/// rho_33 at two-photon resonance moves by more than `fraction` (relative).
/// The larger excursion of the two directions is the uncertainty.
SensitivityReport sensitivity(const CptFitReport& report, double fraction = 0.05,
                              const SensitivityOptions& options = {});

struct DephasingBound {
  double time = 0.0;        // s, 1 / gamma_d*
  double gamma_deph = 0.0;  // 1/s
  double baseline_visibility = 0.0;
  double bound_visibility = 0.0;
  double relative_width = 0.0;  // final bracket width / gamma_d*
  int iterations = 0;
};

struct DephasingOptions {
  double relative_tolerance = 1e-3;
  SteadyStateOptions solver = SteadyStateOptions::direct();
};

/// Dip visibility 1 - rho_33(0) / rho_33(tail) as a function of gamma_d.
double dip_visibility(const CptFitParams& params, const OpticalRates& optical,
                      double tail_detuning_hz,
                      const SteadyStateOptions& solver = SteadyStateOptions::direct());

/// Smallest dephasing rate that lowers the dip visibility by
/// `visibility_drop` (relative), found by bracketing and bisection.
DephasingBound dephasing_upper_bound(const CptFitReport& report,
                                     double visibility_drop = 0.05,
                                     const DephasingOptions& options = {});

}  // namespace cptkit
