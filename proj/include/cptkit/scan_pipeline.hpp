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


// Reduction of raw laser-scan recordings to a fit-ready population
// spectrum: wavemeter correlation, binning, rate thresholding, averaging,
// centering and conversion from counts to excited-state population.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cptkit/cpt_model.hpp"

namespace cptkit {

enum class ScanDirection { Up, Down };
enum class DriveUnit { Volt, Hertz };

const char* to_string(ScanDirection direction);
const char* to_string(DriveUnit unit);

struct ScanSample {
  double timestamp = 0.0;  // s
  double drive = 0.0;      // V or Hz
  double counts = 0.0;     // counts/s
};

struct ScanRecord {
  std::vector<ScanSample> samples;
  ScanDirection direction = ScanDirection::Up;
  DriveUnit unit = DriveUnit::Volt;
  std::string label;

  /// Non-decreasing timestamps, finite entries, at least one sample.
  void validate() const;
};

struct FrequencyLog {
  std::vector<double> timestamps;   // s, non-decreasing
  std::vector<double> frequencies;  // Hz

  void validate() const;
};

struct CorrelateOptions {
  /// Log gaps longer than this (s) around a sample produce a warning.
  double max_gap = 1.0;
};

/// Replaces each sample's drive by the log frequency, linearly interpolated
/// at the sample timestamp. Scans already in Hz are returned unchanged.
ScanRecord correlate_frequency(const ScanRecord& scan, const FrequencyLog& log,
                               const CorrelateOptions& options = {},
                               std::vector<std::string>* warnings = nullptr);

struct BinOptions {
  /// Number of bins; 0 uses the sample count of the reference scan.
  std::size_t bins = 0;
  /// Allow up and down scans in one binning.
  bool merge_directions = false;
};

struct BinnedScans {
  std::vector<double> centers;  // Hz, uniform
  double width = 0.0;           // Hz
  /// counts[scan][bin] holds every sample of that scan nearest that bin.
  std::vector<std::vector<std::vector<double>>> counts;
  std::vector<std::string> labels;
  std::optional<ScanDirection> direction;  // unset when merged
  std::size_t dropped_samples = 0;         // outside the reference range
};

/// Uniform bins spanning the reference scan's frequency range; each sample
/// goes to the nearest bin center.
BinnedScans bin_scans(const std::vector<ScanRecord>& scans, std::size_t reference = 0,
                      const BinOptions& options = {});

struct ReducedSpectrum {
  std::vector<double> bin_centers;  // Hz
  std::vector<double> mean_counts;  // counts/s, NaN for empty bins
  std::vector<std::size_t> n_contributing;
  std::vector<std::size_t> n_rejected;  // samples under the threshold
  std::vector<std::size_t> empty_bins;
  double center_frequency = 0.0;  // Hz subtracted from bin_centers
  std::optional<ScanDirection> direction;
  double min_rate = 0.0;

  /// Bins with at least one contributing scan.
  std::vector<std::size_t> valid_bins() const;
};

inline constexpr double kDefaultMinRate = 2000.0;  // counts/s

/// Drops samples below `min_rate`, averages the rest within each scan and
/// then across the scans that still contribute to the bin.
ReducedSpectrum threshold_and_average(const BinnedScans& binned,
                                      double min_rate = kDefaultMinRate);

/// Shifts bin centers so the inverted-Gaussian center of the dip sits at 0.
ReducedSpectrum center_spectrum(const ReducedSpectrum& spectrum);

inline constexpr double kDefaultCountBackground = 500.0;  // counts/s

struct PopulationSpectrum {
  CptSpectrum spectrum;
  std::vector<std::size_t> clipped;     // negative values set to 0
  std::vector<std::size_t> above_one;   // population > 1
};

/// population = 0.5 (counts - background) / f_sat over the non-empty bins.
PopulationSpectrum counts_to_population(const ReducedSpectrum& spectrum, double f_sat,
                                        double background = kDefaultCountBackground);

struct ReduceOptions {
  CorrelateOptions correlate;
  BinOptions bin;
  /// Reference scan within each direction group.
  std::size_t reference = 0;
  double min_rate = kDefaultMinRate;
  bool center = true;
  double f_sat = 30000.0;  // counts/s
  double background = kDefaultCountBackground;
};

struct Reduction {
  ReducedSpectrum reduced;
  PopulationSpectrum population;
  std::vector<std::string> scan_labels;
  std::vector<std::string> warnings;
  std::size_t dropped_samples = 0;
};

/// Full chain from raw scans to population spectra. Produces one reduction
/// per scan direction present (up first), or a single one when directions
/// are merged.
std::vector<Reduction> reduce_scans(const std::vector<ScanRecord>& scans,
                                    const FrequencyLog& log,
                                    const ReduceOptions& options = {});

/// Inverse of counts_to_population for simulated data.
double population_to_counts(double population, double f_sat,
                            double background = kDefaultCountBackground);

}  // namespace cptkit
