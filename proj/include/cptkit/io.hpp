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


// Plain-text file formats shared by the command-line tools.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cptkit/cpt_model.hpp"
#include "cptkit/curvefit.hpp"
#include "cptkit/model_select.hpp"
#include "cptkit/scan_pipeline.hpp"

namespace cptkit::io {

struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, per row
  std::vector<std::string> comments;      // text after '#', trimmed
};

/// Numeric CSV with one header line. Lines starting with '#' are comments;
/// blank lines are skipped. Errors name the file and line.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in, const std::string& name);

/// Columns must match `expected` exactly, in order.
void require_header(const CsvTable& table, const std::vector<std::string>& expected);

ScanRecord read_scan_csv(const std::filesystem::path& path);
void write_scan_csv(const std::filesystem::path& path, const ScanRecord& scan);

FrequencyLog read_frequency_log(const std::filesystem::path& path);
void write_frequency_log(const std::filesystem::path& path, const FrequencyLog& log);

/// `detuning_hz,population` (or `detuning_hz,fluorescence`).
CptSpectrum read_spectrum_csv(const std::filesystem::path& path);
void write_spectrum_csv(std::ostream& out, const CptSpectrum& spectrum);
void write_spectrum_csv(const std::filesystem::path& path, const CptSpectrum& spectrum);

/// `bin_center_hz,mean_counts_per_s,n_contributing,n_rejected`; empty bins
/// carry `nan` counts.
void write_reduced_csv(std::ostream& out, const ReducedSpectrum& spectrum);

/// Two or three numeric columns: x, y and optionally y_err.
Curve1D read_curve_csv(const std::filesystem::path& path);

/// `temperature_K,linewidth_MHz,error_MHz`, converted to Hz.
ThermalSeries read_thermal_csv(const std::filesystem::path& path);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Lower-case hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

/// Writes text atomically enough for batch use: to a sibling temp file,
/// then renamed into place. Creates parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cptkit::io
