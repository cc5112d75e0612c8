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


// Run configuration read from a JSON file. Every key is optional; unknown
// keys are rejected with the line they appear on.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cptkit/broadening.hpp"
#include "cptkit/cpt_model.hpp"
#include "cptkit/curvefit.hpp"
#include "cptkit/scan_pipeline.hpp"

namespace cptkit::cli {

struct SystemConfig {
  double delta_12_hz = kDefaultDelta12;
  double temperature_k = kDefaultTemperature;
  double branch_ratio = 2.4;
  double tau_se_s = 4.55e-9;
};

struct CptConfig {
  double omega_c_2pi_mhz = 20.0;
  double omega_d_2pi_mhz = 200.0;
  double t_minus_ps = 30.0;
  double gamma_deph_per_s = 0.0;
};

struct GridConfig {
  std::size_t points = 201;
  double span_fwhm = 6.0;
  /// Fixed half span in Hz instead of the dip-width estimate.
  std::optional<double> half_span_hz;
};

struct SimulateConfig {
  SpectrumKind kind = SpectrumKind::Population;
  SteadyStateMethod solver = SteadyStateMethod::Direct;
};

struct FitConfig {
  std::size_t starts = 20;
  double gamma_minus_min_per_s = 1.0 / 100e-12;
  double gamma_minus_max_per_s = 1.0 / 5e-12;
  double omega_spread = 10.0;
  std::size_t max_evaluations = 1500;
  double sensitivity_fraction = 0.05;
  bool dephasing = true;
  double visibility_drop = 0.05;
  double dephasing_tolerance = 1e-3;
};

struct ScansConfig {
  double min_rate = kDefaultMinRate;
  std::size_t bins = 0;
  bool merge_directions = false;
  double max_gap_s = 1.0;
  std::size_t reference = 0;
  bool center = true;
  double f_sat = 30000.0;
  double background = kDefaultCountBackground;
};

struct ThermalConfig {
  /// Points in the linear fit; detected from the R^2 scan when unset.
  std::optional<std::size_t> cutoff_points;
  /// Anchored-cubic offset in Hz; the linear intercept when unset.
  std::optional<double> anchor_hz;
};

struct RunConfig {
  std::uint64_t seed = 20240917;
  PhysicalConstants constants;
  SystemConfig system;
  CptConfig cpt;
  GridConfig grid;
  SimulateConfig simulate;
  FitConfig fit;
  ScansConfig scans;
  ThermalConfig thermal;
  CurveFitOptions curvefit;
  HomogeneousConvention broadening = HomogeneousConvention::PartialRate;

  OpticalRates optical() const;
  CptFitParams cpt_params() const;
  SteadyStateOptions solver() const;
  CptFitOptions fit_options() const;
  ReduceOptions reduce_options() const;
};

/// Throws ConfigError naming the file, line and key.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& name);

/// Every field, defaults included.
nlohmann::json to_json(const RunConfig& config);

/// Broadening inputs JSON. tau_se_s and branch_ratio fall back to the
/// run config; an optional "uncertainties" object takes the same keys.
struct BroadeningRequest {
  BroadeningInputs inputs;
  BroadeningUncertainties uncertainties;
};
BroadeningRequest parse_broadening_inputs(const std::string& text, const std::string& name,
                                          const RunConfig& config);

struct ManifestEntry {
  std::string name;
  std::vector<std::filesystem::path> scans;
  std::filesystem::path frequency_log;
  std::filesystem::path output_dir;
  /// Laser powers in nW, recorded in the reports.
  std::vector<std::pair<std::string, double>> powers_nw;
  /// Initial guess, defaulting to the run config.
  CptConfig initial;
};

/// Batch manifest. Relative paths resolve against `base_dir`.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& name,
                                          const std::filesystem::path& base_dir,
                                          const RunConfig& config);

std::string read_text(const std::filesystem::path& path);

}  // namespace cptkit::cli
