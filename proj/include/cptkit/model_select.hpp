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


// Linear versus cubic models of linewidth against temperature, with the
// incremental goodness-of-fit scan used to pick the crossover temperature.

#pragma once

#include <optional>
#include <vector>

#include "cptkit/curvefit.hpp"

namespace cptkit {

struct ThermalSeries {
  std::vector<double> temperatures;      // K, ascending
  std::vector<double> linewidths;        // Hz
  std::vector<double> linewidth_errors;  // Hz, may be empty

  std::size_t size() const { return temperatures.size(); }
  void validate() const;
};

enum class ThermalModelKind { Linear, Cubic, CubicAnchored };

struct ModelFamily {
  ThermalModelKind kind = ThermalModelKind::Linear;
  /// Fixed offset of the anchored cubic. When unset, it is the intercept of
  /// a linear fit on the same points.
  std::optional<double> y0;

  static ModelFamily linear() { return {ThermalModelKind::Linear, std::nullopt}; }
  static ModelFamily cubic() { return {ThermalModelKind::Cubic, std::nullopt}; }
  static ModelFamily cubic_anchored(std::optional<double> y0 = std::nullopt) {
    return {ThermalModelKind::CubicAnchored, y0};
  }
};

const char* to_string(ThermalModelKind kind);

/// Ordinary least squares on the first `n_points` points. R^2 is in-sample.
LineFitResult fit_thermal_model(const ThermalSeries& series, const ModelFamily& family,
                                std::size_t n_points);

struct IncrementalR2 {
  std::vector<std::size_t> n_points;  // 3, 4, ..., N
  std::vector<double> r2;
};

/// R^2 of fits on the first n points, evaluated on those same points.
IncrementalR2 incremental_r2(const ThermalSeries& series, const ModelFamily& family);

/// R^2 of fits on the first n points, evaluated on the whole series.
IncrementalR2 incremental_r2_out_of_sample(const ThermalSeries& series,
                                           const ModelFamily& family);

struct Cutoff {
  std::size_t index = 0;     // into the R^2 sequence
  std::size_t n_points = 0;  // points in the fit at the maximum
  double temperature = 0.0;  // K, last point included in that fit
};

/// First interior local maximum, r2[k] > r2[k-1] and r2[k] >= r2[k+1].
/// Returns nullopt when the sequence has none.
std::optional<Cutoff> detect_cutoff(const IncrementalR2& sequence,
                                    const std::vector<double>& temperatures);

/// Sum of |y_i - model(x_i)| over the given indices.
double total_abs_error(const ThermalSeries& series, const LineFitResult& fit,
                       const std::vector<std::size_t>& indices);

/// Indices 0, 1, ..., n - 1.
std::vector<std::size_t> first_indices(std::size_t n);

}  // namespace cptkit
