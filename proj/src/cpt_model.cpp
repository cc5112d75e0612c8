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

#include "cptkit/cpt_model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "cptkit/error.hpp"

namespace cptkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double excited_population_raw(const CptFitParams& params, const SystemRates& rates,
                              double delta_d_hz, const SteadyStateOptions& solver) {
  DriveConfig drive;
  drive.omega_c = params.omega_c;
  drive.omega_d = params.omega_d;
  drive.delta_c = 0.0;
  drive.delta_d = hz_to_angular(delta_d_hz);
  const auto h = build_hamiltonian(drive);
  const auto jumps = build_jump_operators(rates);
  return steady_state(h, jumps, solver).population(kExcited);
}

double relative_change(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

CptFitParams with_log_params(const CptFitParams& base, const Eigen::VectorXd& x) {
  CptFitParams p = base;
  p.omega_c = std::exp(x[0]);
  p.omega_d = std::exp(x[1]);
  p.gamma_minus = std::exp(x[2]);
  return p;
}

}  // namespace

void CptSpectrum::validate() const {
  if (detunings_d.size() != values.size()) {
    throw BadInput("detunings and values differ in length");
  }
  for (std::size_t i = 0; i < detunings_d.size(); ++i) {
    if (!std::isfinite(detunings_d[i]) || !std::isfinite(values[i])) {
      throw BadInput("spectrum contains non-finite entries");
    }
    if (values[i] < 0.0) throw BadInput("spectrum values must be >= 0");
    if (i > 0 && !(detunings_d[i] > detunings_d[i - 1])) {
      throw BadInput("detunings must be strictly increasing");
    }
  }
}

OpticalRates OpticalRates::from_lifetime(double tau_se, double branch_ratio) {
  if (!(tau_se > 0.0) || !(branch_ratio > 0.0) || !std::isfinite(tau_se) ||
      !std::isfinite(branch_ratio)) {
    throw BadInput("lifetime and branching ratio must be positive");
  }
  const double total = 1.0 / tau_se;
  return {total * branch_ratio / (1.0 + branch_ratio), total / (1.0 + branch_ratio)};
}

SystemRates CptFitParams::system_rates(const OpticalRates& optical) const {
  return SystemRates::thermalized(optical.gamma_c, optical.gamma_d, gamma_minus,
                                  gamma_deph, delta_12, temperature, constants);
}

double excited_population(const CptFitParams& params, const OpticalRates& optical,
                          double delta_d_hz, const SteadyStateOptions& solver) {
  return excited_population_raw(params, params.system_rates(optical), delta_d_hz,
                                solver);
}

CptSpectrum simulate_cpt_spectrum(const CptFitParams& params,
                                  const OpticalRates& optical,
                                  const std::vector<double>& grid_hz,
                                  const SteadyStateOptions& solver) {
  const SystemRates rates = params.system_rates(optical);
  CptSpectrum out;
  out.kind = SpectrumKind::Population;
  out.detunings_d = grid_hz;
  out.values.reserve(grid_hz.size());
  for (double d : grid_hz) {
    out.values.push_back(excited_population_raw(params, rates, d, solver));
  }
  return out;
}

double estimate_dip_fwhm(const CptFitParams& params, const OpticalRates& optical) {
  const SystemRates rates = params.system_rates(optical);
  const SteadyStateOptions solver = SteadyStateOptions::direct();
  const double base =
      (rates.gamma_minus + rates.gamma_plus + optical.gamma_c + optical.gamma_d) / kTwoPi;
  if (!(base > 0.0)) throw BadInput("cannot size a dip without any decay rate");

  const double far = 50.0 * base;
  const double center = excited_population_raw(params, rates, 0.0, solver);
  const double tail = excited_population_raw(params, rates, far, solver);
  const double half = 0.5 * (center + tail);
  if (!(tail - center > 1e-9 * tail)) return base;

  double lo = 0.0;
  double hi = far;
  for (int i = 0; i < 80 && hi - lo > 1e-6 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (excited_population_raw(params, rates, mid, solver) < half) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + hi;
}

std::vector<double> default_detuning_grid(const CptFitParams& params,
                                          const OpticalRates& optical,
                                          std::size_t points, double span_fwhm) {
  if (points < 2) throw BadInput("a detuning grid needs at least two points");
  if (!(span_fwhm > 0.0)) throw BadInput("grid span must be positive");
  const double half_span = span_fwhm * estimate_dip_fwhm(params, optical);
  std::vector<double> grid(points);
  const double step = 2.0 * half_span / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = -half_span + step * static_cast<double>(i);
  }
  if (points % 2 == 1) grid[points / 2] = 0.0;
  return grid;
}

double interpolate_at_zero(const CptSpectrum& spectrum) {
  const auto& x = spectrum.detunings_d;
  const auto& y = spectrum.values;
  if (x.size() < 3) throw BadInput("need three points to interpolate the dip");
  std::size_t k = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) < std::abs(x[k])) k = i;
  }
  k = std::clamp<std::size_t>(k, 1, x.size() - 2);
  const double x0 = x[k - 1], x1 = x[k], x2 = x[k + 1];
  // Lagrange basis evaluated at 0
  const double l0 = (x1 * x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (x0 * x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (x0 * x1) / ((x2 - x0) * (x2 - x1));
  return l0 * y[k - 1] + l1 * y[k] + l2 * y[k + 1];
}

const ParameterSensitivity& SensitivityReport::at(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw BadInput("no sensitivity entry named '" + name + "'");
}

bool SensitivityReport::all_bounded() const {
  return std::all_of(parameters.begin(), parameters.end(),
                     [](const ParameterSensitivity& p) { return p.bounded; });
}

CptFitReport fit_cpt(const CptSpectrum& spectrum, const OpticalRates& optical,
                     const CptFitParams& init, const CptFitOptions& options) {
  spectrum.validate();
  if (spectrum.kind != SpectrumKind::Population) {
    throw BadInput("fits run on population spectra; convert fluorescence first");
  }
  if (spectrum.values.size() < 10) {
    throw BadInput("CPT fit needs at least 10 points, got " +
                   std::to_string(spectrum.values.size()));
  }
  if (!(init.omega_c > 0.0) || !(init.omega_d > 0.0) || !(init.gamma_minus > 0.0)) {
    throw BadInput("initial Omega_C, Omega_D and gamma_- must be positive");
  }
  init.system_rates(optical);  // validates the fixed rates

  const std::size_t n = spectrum.values.size();
  const double tail =
      std::max(spectrum.values.front(), spectrum.values.back());
  const double data_dip = interpolate_at_zero(spectrum);
  if (!(tail > 0.0) || 1.0 - data_dip / tail < options.min_visibility) {
    std::ostringstream msg;
    msg << "no CPT dip in the data (zero-detuning value " << data_dip
        << ", tail " << tail << ")";
    throw FitDiverged(msg.str());
  }

  double sum_sq = 0.0;
  double mean = 0.0;
  for (double v : spectrum.values) {
    sum_sq += v * v;
    mean += v;
  }
  mean /= static_cast<double>(n);

  std::size_t evaluations = 0;
  auto sse = [&](const CptFitParams& p) {
    ++evaluations;
    const SystemRates rates = p.system_rates(optical);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = excited_population_raw(p, rates, spectrum.detunings_d[i],
                                              options.solver) -
                       spectrum.values[i];
      s += r * r;
    }
    return s;
  };
  const Objective objective = [&](const Eigen::VectorXd& x) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 200.0) return kInf;
    try {
      return sse(with_log_params(init, x)) / sum_sq;
    } catch (const Error&) {
      return kInf;
    }
  };

  Eigen::VectorXd x_init(3);
  x_init << std::log(init.omega_c), std::log(init.omega_d), std::log(init.gamma_minus);
  const double initial_residual = sse(init);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo));
  };
  const double spread = std::log(options.omega_spread);

  MinimizeResult best;
  best.value = kInf;
  const std::size_t starts = std::max<std::size_t>(options.starts, 1);
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd x0 = x_init;
    if (s > 0) {
      x0[0] += (2.0 * unit(rng) - 1.0) * spread;
      x0[1] += (2.0 * unit(rng) - 1.0) * spread;
      x0[2] = log_uniform(options.gamma_minus_min, options.gamma_minus_max);
    }
    auto result = nelder_mead(objective, x0, options.simplex);
    if (result.value < best.value) best = std::move(result);
  }
  NelderMeadOptions polish = options.simplex;
  polish.initial_step = 0.2 * options.simplex.initial_step;
  for (int round = 0; round < 2; ++round) {
    auto result = nelder_mead(objective, best.x, polish);
    if (result.value <= best.value) best = std::move(result);
  }

  if (!std::isfinite(best.value)) {
    throw FitDiverged("no start produced a finite residual");
  }
  CptFitReport report;
  report.params = with_log_params(init, best.x);
  report.residual = best.value * sum_sq;
  if (report.residual > initial_residual) {
    std::ostringstream msg;
    msg << "fit residual " << report.residual << " did not improve on the initial "
        << initial_residual;
    throw FitDiverged(msg.str());
  }

  report.optical = optical;
  report.initial_residual = initial_residual;
  report.t_minus = 1.0 / report.params.gamma_minus;
  report.t_plus = 1.0 / report.params.gamma_plus();
  report.points = n;
  report.starts = starts;
  report.evaluations = evaluations;
  report.data_dip_population = data_dip;
  report.tail_detuning = std::max(std::abs(spectrum.detunings_d.front()),
                                  std::abs(spectrum.detunings_d.back()));
  report.dip_population =
      excited_population(report.params, optical, 0.0, options.solver);
  report.fitted_values =
      simulate_cpt_spectrum(report.params, optical, spectrum.detunings_d, options.solver)
          .values;
  double sst = 0.0;
  for (double v : spectrum.values) sst += (v - mean) * (v - mean);
  report.r_squared = sst > 0.0 ? 1.0 - report.residual / sst : 0.0;

  SensitivityOptions sens;
  sens.allow_unbounded = true;
  sens.solver = options.solver;
  report.uncertainties = sensitivity(report, options.sensitivity_fraction, sens);
  return report;
}

SensitivityReport sensitivity(const CptFitReport& report, double fraction,
                              const SensitivityOptions& options) {
  if (!(fraction > 0.0) || !std::isfinite(fraction)) {
    throw BadInput("sensitivity fraction must be positive");
  }
  if (!(options.step_factor > 1.0)) throw BadInput("step factor must exceed 1");
  const CptFitParams& base = report.params;
  const double reference =
      excited_population(base, report.optical, 0.0, options.solver);
  if (!(reference > 0.0)) {
    throw NumericalInstability("zero excited population at two-photon resonance");
  }
  const int max_steps = static_cast<int>(
      std::ceil(options.max_decades * std::log(10.0) / std::log(options.step_factor)));

  // Returns the first scaled value that moves the dip by more than
  // `fraction`, or nullopt within the search range.
  auto scan = [&](double CptFitParams::*field, double factor) -> std::optional<double> {
    CptFitParams p = base;
    for (int k = 1; k <= max_steps; ++k) {
      p.*field = base.*field * std::pow(factor, k);
      const double v = excited_population(p, report.optical, 0.0, options.solver);
      if (relative_change(v, reference) > fraction) return p.*field;
    }
    return std::nullopt;
  };

  SensitivityReport out;
  out.fraction = fraction;
  struct Field {
    const char* name;
    double CptFitParams::*member;
  };
  const Field fields[] = {{"omega_c", &CptFitParams::omega_c},
                          {"omega_d", &CptFitParams::omega_d},
                          {"gamma_minus", &CptFitParams::gamma_minus}};
  std::optional<double> gamma_up, gamma_down;
  for (const auto& field : fields) {
    const double value = base.*field.member;
    const auto up = scan(field.member, options.step_factor);
    const auto down = scan(field.member, 1.0 / options.step_factor);
    ParameterSensitivity s;
    s.name = field.name;
    s.value = value;
    s.excursion_up = up ? *up - value : kInf;
    s.excursion_down = down ? value - *down : kInf;
    s.bounded = up && down;
    s.uncertainty = std::max(s.excursion_up, s.excursion_down);
    out.parameters.push_back(s);
    if (field.member == &CptFitParams::gamma_minus) {
      gamma_up = up;
      gamma_down = down;
    }
  }

  // Lifetimes follow from the gamma_- bounds; a faster rate is a shorter time.
  const double boltzmann = base.gamma_plus() / base.gamma_minus;
  for (const auto& [name, scale] :
       {std::pair<const char*, double>{"t_minus", 1.0}, {"t_plus", 1.0 / boltzmann}}) {
    ParameterSensitivity s;
    s.name = name;
    s.value = scale / base.gamma_minus;
    s.excursion_down = gamma_up ? s.value - scale / *gamma_up : kInf;
    s.excursion_up = gamma_down ? scale / *gamma_down - s.value : kInf;
    s.bounded = gamma_up && gamma_down;
    s.uncertainty = std::max(s.excursion_up, s.excursion_down);
    out.parameters.push_back(s);
  }

  if (!options.allow_unbounded) {
    for (const auto& p : out.parameters) {
      if (!p.bounded) {
        std::ostringstream msg;
        msg << "no " << fraction * 100.0 << "% change of the dip within "
            << options.max_decades << " decades of " << p.name;
        throw UnboundedSensitivity(msg.str());
      }
    }
  }
  return out;
}

double dip_visibility(const CptFitParams& params, const OpticalRates& optical,
                      double tail_detuning_hz, const SteadyStateOptions& solver) {
  const SystemRates rates = params.system_rates(optical);
  const double center = excited_population_raw(params, rates, 0.0, solver);
  const double tail = excited_population_raw(params, rates, tail_detuning_hz, solver);
  if (!(tail > 0.0)) throw NumericalInstability("zero excited population in the tail");
  return 1.0 - center / tail;
}

DephasingBound dephasing_upper_bound(const CptFitReport& report,
                                     double visibility_drop,
                                     const DephasingOptions& options) {
  if (report.params.gamma_deph != 0.0) {
    throw BadInput("the dephasing bound starts from a fit with gamma_d = 0");
  }
  if (!(visibility_drop > 0.0 && visibility_drop < 1.0)) {
    throw BadInput("visibility drop must lie in (0, 1)");
  }
  if (!(report.tail_detuning > 0.0)) throw BadInput("report has no tail detuning");

  CptFitParams p = report.params;
  auto visibility = [&](double gamma_deph) {
    p.gamma_deph = gamma_deph;
    return dip_visibility(p, report.optical, report.tail_detuning, options.solver);
  };

  DephasingBound out;
  out.baseline_visibility = visibility(0.0);
  if (!(out.baseline_visibility > 0.0)) {
    throw ModelAssumptionViolated("fitted model has no dip to degrade");
  }
  const double target = (1.0 - visibility_drop) * out.baseline_visibility;
  const double slack = 1e-9 * out.baseline_visibility;

  // Bracket by doubling from far below any rate in the model.
  double lo = 0.0;
  double v_lo = out.baseline_visibility;
  double hi = 1e-6 * report.params.gamma_minus;
  double v_hi = visibility(hi);
  while (v_hi > target) {
    if (v_hi > v_lo + slack) {
      throw ModelAssumptionViolated("dip visibility grew with dephasing");
    }
    if (hi > 1e20) throw ModelAssumptionViolated("dephasing never closes the dip");
    lo = hi;
    v_lo = v_hi;
    hi *= 2.0;
    v_hi = visibility(hi);
    ++out.iterations;
  }
  while (hi - lo > options.relative_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    const double v_mid = visibility(mid);
    if (v_mid > v_lo + slack || v_mid < v_hi - slack) {
      throw ModelAssumptionViolated("dip visibility is not monotone in dephasing");
    }
    if (v_mid > target) {
      lo = mid;
      v_lo = v_mid;
    } else {
      hi = mid;
      v_hi = v_mid;
    }
    ++out.iterations;
  }
  out.gamma_deph = hi;
  out.time = 1.0 / hi;
  out.bound_visibility = v_hi;
  out.relative_width = (hi - lo) / hi;
  return out;
}

}  // namespace cptkit
