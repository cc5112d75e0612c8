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

#include <numbers>

namespace cptkit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// CODATA 2018 exact values. Overridable per run through the config file.
struct PhysicalConstants {
  double planck = 6.62607015e-34;     // J s
  double boltzmann = 1.380649e-23;    // J / K
};

// Internal angular quantities are rad/s; user-facing frequencies are Hz or
// "2pi MHz" (i.e. the angular value divided by 2pi, in MHz).
constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
constexpr double angular_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }
constexpr double two_pi_mhz(double mhz) { return kTwoPi * mhz * 1e6; }
constexpr double to_two_pi_mhz(double rad_per_s) {
  return rad_per_s / (kTwoPi * 1e6);
}

}  // namespace cptkit
