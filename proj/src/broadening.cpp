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


#include "cptkit/broadening.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cptkit/error.hpp"
#include "cptkit/units.hpp"

namespace cptkit {

namespace {

struct Chain {
  HomogeneousLinewidths hom;
  double c_pow = 0.0;
  double d_pow = 0.0;
  double diff = 0.0;
  double d_phon = 0.0;
};

// No sign checks, so finite differences can step across them.
Chain evaluate_chain(const BroadeningInputs& in, HomogeneousConvention convention) {
  Chain c;
  c.hom = homogeneous_linewidths(in.tau_se, in.branch_ratio, convention);
  c.c_pow = power_broadening(c.hom.c, in.p_c, in.p_sat);
  c.d_pow = power_broadening(c.hom.d, in.p_d, in.p_sat * in.branch_ratio);
  c.diff = in.gamma_c_measured - c.hom.c - c.c_pow;
  c.d_phon = in.gamma_d_measured - c.hom.d - c.d_pow - c.diff;
  return c;
}

std::array<double*, 7> fields(BroadeningInputs& in) {
  return {&in.tau_se, &in.branch_ratio, &in.p_c, &in.p_d,
          &in.p_sat, &in.gamma_c_measured, &in.gamma_d_measured};
}

std::array<double, 7> fields(const BroadeningUncertainties& e) {
  return {e.tau_se, e.branch_ratio, e.p_c, e.p_d,
          e.p_sat, e.gamma_c_measured, e.gamma_d_measured};
}

}  // namespace

const char* to_string(HomogeneousConvention convention) {
  switch (convention) {
    case HomogeneousConvention::PartialRate:
      return "partial_rate";
    case HomogeneousConvention::InverseFraction:
      return "inverse_fraction";
  }
  return "unknown";
}

void BroadeningInputs::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
      throw BadInput(std::string(name) + " must be positive");
  };
  auto non_negative = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
      throw BadInput(std::string(name) + " must be non-negative");
  };
  positive(tau_se, "tau_se");
  positive(branch_ratio, "branch_ratio");
  non_negative(p_c, "p_c");
  non_negative(p_d, "p_d");
  positive(p_sat, "p_sat");
  positive(gamma_c_measured, "gamma_c_measured");
  positive(gamma_d_measured, "gamma_d_measured");
}

HomogeneousLinewidths homogeneous_linewidths(double tau_se, double branch_ratio,
                                             HomogeneousConvention convention) {
  if (!(tau_se > 0.0) || !(branch_ratio > 0.0))
    throw BadInput("tau_se and branch_ratio must be positive");
  const double fc = branch_ratio / (1.0 + branch_ratio);
  const double fd = 1.0 / (1.0 + branch_ratio);
  const double total = 1.0 / (kTwoPi * tau_se);
  if (convention == HomogeneousConvention::PartialRate) return {fc * total, fd * total};
  return {total / fc, total / fd};
}

double power_broadening(double gamma_hom, double p, double p_sat) {
  if (!(p_sat > 0.0)) throw BadInput("saturation power must be positive");
  if (p < 0.0) throw BadInput("power must be non-negative");
  return gamma_hom * (std::sqrt(1.0 + p / p_sat) - 1.0);
}

double spectral_diffusion(double gamma_c_measured, double gamma_c_hom,
                          double gamma_c_pow) {
  const double diff = gamma_c_measured - gamma_c_hom - gamma_c_pow;
  if (diff < 0.0)
    throw NegativeComponent("measured C linewidth is below its homogeneous and "
                            "power-broadened parts");
  return diff;
}

BroadeningReport phononic_component(const BroadeningInputs& inputs,
                                    const BroadeningUncertainties& errors,
                                    HomogeneousConvention convention) {
  inputs.validate();
  const Chain c = evaluate_chain(inputs, convention);
  spectral_diffusion(inputs.gamma_c_measured, c.hom.c, c.c_pow);
  if (!(c.d_phon > 0.0))
    throw NegativeComponent("phononic D component is not positive");

  BroadeningReport r;
  r.gamma_c_hom = c.hom.c;
  r.gamma_d_hom = c.hom.d;
  r.gamma_c_pow = c.c_pow;
  r.gamma_d_pow = c.d_pow;
  r.gamma_diff = c.diff;
  r.gamma_d_phon = c.d_phon;
  r.t_minus_d = 1.0 / (kTwoPi * c.d_phon);
  r.convention = convention;
  r.assumptions = {"D transition couples to charge noise as C does",
                   "D saturation power is the C saturation power times the branching ratio"};

  // First-order propagation with central differences.
  const auto sigma = fields(errors);
  double var = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] == 0.0) continue;
    BroadeningInputs up = inputs;
    BroadeningInputs down = inputs;
    const double x = *fields(up)[i];
    const double h = 1e-6 * std::max(std::abs(x), sigma[i]);
    *fields(up)[i] = x + h;
    *fields(down)[i] = x - h;
    const double slope = (evaluate_chain(up, convention).d_phon -
                          evaluate_chain(down, convention).d_phon) / (2.0 * h);
    var += slope * slope * sigma[i] * sigma[i];
  }
  r.gamma_d_phon_error = std::sqrt(var);
  r.t_minus_d_error = r.t_minus_d * r.gamma_d_phon_error / r.gamma_d_phon;
  return r;
}

}  // namespace cptkit
