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


// Decomposition of the D-transition linewidth into homogeneous, power,
// spectral-diffusion and phononic parts, and the relaxation time implied by
// the phononic part.

#pragma once

#include <string>
#include <vector>

namespace cptkit {

/// How the branching ratio enters the homogeneous linewidths.
enum class HomogeneousConvention {
  /// Partial decay rates over 2 pi; C:D = r:1, summing to 1/(2 pi tau).
  PartialRate,
  /// 1/(2 pi tau r/(1+r)) for C and 1/(2 pi tau/(1+r)) for D.
  InverseFraction,
};

const char* to_string(HomogeneousConvention convention);

struct BroadeningInputs {
  double tau_se = 0.0;        // s
  double branch_ratio = 2.4;  // C:D
  double p_c = 0.0;           // W
  double p_d = 0.0;           // W
  double p_sat = 0.0;         // W, C transition
  double gamma_c_measured = 0.0;  // Hz
  double gamma_d_measured = 0.0;  // Hz

  /// Positive values; powers may be zero.
  void validate() const;
};

/// One-sigma input uncertainties; zero means exact.
struct BroadeningUncertainties {
  double tau_se = 0.0;
  double branch_ratio = 0.0;
  double p_c = 0.0;
  double p_d = 0.0;
  double p_sat = 0.0;
  double gamma_c_measured = 0.0;
  double gamma_d_measured = 0.0;
};

struct BroadeningReport {
  double gamma_c_hom = 0.0;  // Hz
  double gamma_d_hom = 0.0;
  double gamma_c_pow = 0.0;
  double gamma_d_pow = 0.0;
  double gamma_diff = 0.0;
  double gamma_d_phon = 0.0;
  double t_minus_d = 0.0;  // s
  HomogeneousConvention convention = HomogeneousConvention::PartialRate;
  /// First-order propagated one-sigma errors, same units.
  double gamma_d_phon_error = 0.0;
  double t_minus_d_error = 0.0;
  std::vector<std::string> assumptions;
};

struct HomogeneousLinewidths {
  double c = 0.0;  // Hz
  double d = 0.0;  // Hz
};

HomogeneousLinewidths homogeneous_linewidths(
    double tau_se, double branch_ratio,
    HomogeneousConvention convention = HomogeneousConvention::PartialRate);

/// gamma_hom (sqrt(1 + p / p_sat) - 1).
double power_broadening(double gamma_hom, double p, double p_sat);

/// gamma_c_measured - gamma_c_hom - gamma_c_pow; NegativeComponent below 0.
double spectral_diffusion(double gamma_c_measured, double gamma_c_hom,
                          double gamma_c_pow);

/// Full chain. The D saturation power is p_sat times the branching ratio.
/// Throws NegativeComponent when the phononic part is not positive.
BroadeningReport phononic_component(
    const BroadeningInputs& inputs, const BroadeningUncertainties& errors = {},
    HomogeneousConvention convention = HomogeneousConvention::PartialRate);

}  // namespace cptkit
