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

#include <cmath>

#include "cptkit/error.hpp"
#include "cptkit/units.hpp"

namespace cptkit {

/// exp(-h * delta_12 / (k_B * T)): ratio of the upward to the downward
/// phononic rate between the two ground orbitals.
inline double boltzmann_factor(double delta_12_hz, double temperature_k,
                               const PhysicalConstants& c = {}) {
  return std::exp(-c.planck * delta_12_hz / (c.boltzmann * temperature_k));
}

/// Upward rate gamma_+ implied by detailed balance with gamma_-.
inline double boltzmann_gamma_plus(double gamma_minus, double delta_12_hz,
                                   double temperature_k,
                                   const PhysicalConstants& c = {}) {
  if (!(gamma_minus >= 0.0) || !(delta_12_hz > 0.0) || !(temperature_k > 0.0)) {
    throw BadInput("boltzmann_gamma_plus needs gamma_minus >= 0, delta_12 > 0, T > 0");
  }
  return gamma_minus * boltzmann_factor(delta_12_hz, temperature_k, c);
}

}  // namespace cptkit
