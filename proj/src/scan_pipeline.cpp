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


#include "cptkit/scan_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cptkit/curvefit.hpp"
#include "cptkit/error.hpp"

namespace cptkit {

const char* to_string(ScanDirection direction) {
  return direction == ScanDirection::Up ? "up" : "down";
}

const char* to_string(DriveUnit unit) { return unit == DriveUnit::Volt ? "V" : "Hz"; }

void ScanRecord::validate() const {
  if (samples.empty()) throw BadInput("scan '" + label + "' has no samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.timestamp) || !std::isfinite(s.drive) || !std::isfinite(s.counts)) {
      throw BadInput("scan '" + label + "' contains non-finite values");
    }
    if (i > 0 && s.timestamp < samples[i - 1].timestamp) {
      throw BadInput("scan '" + label + "' timestamps decrease at sample " +
                     std::to_string(i));
    }
  }
}

void FrequencyLog::validate() const {
  if (timestamps.size() != frequencies.size()) {
    throw BadInput("frequency log columns differ in length");
  }
  if (timestamps.size() < 2) throw BadInput("frequency log needs at least two entries");
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!std::isfinite(timestamps[i]) || !std::isfinite(frequencies[i])) {
      throw BadInput("frequency log contains non-finite values");
    }
    if (i > 0 && timestamps[i] < timestamps[i - 1]) {
      throw BadInput("frequency log timestamps decrease at entry " + std::to_string(i));
    }
  }
}

ScanRecord correlate_frequency(const ScanRecord& scan, const FrequencyLog& log,
                               const CorrelateOptions& options,
                               std::vector<std::string>* warnings) {
  scan.validate();
  if (scan.unit == DriveUnit::Hertz) return scan;
  log.validate();
  const auto& t = log.timestamps;
  const auto& f = log.frequencies;

  ScanRecord out = scan;
  out.unit = DriveUnit::Hertz;
  std::size_t last_warned = std::numeric_limits<std::size_t>::max();
  for (auto& sample : out.samples) {
    const double ts = sample.timestamp;
    if (ts < t.front() || ts > t.back()) {
      std::ostringstream msg;
      msg << "sample at t=" << ts << " s lies outside the frequency log span ["
          << t.front() << ", " << t.back() << "] s";
      throw OutOfRange(msg.str());
    }
    // first entry strictly after ts, clamped so [hi-1, hi] brackets ts
    auto it = std::upper_bound(t.begin(), t.end(), ts);
    std::size_t hi = static_cast<std::size_t>(it - t.begin());
    if (hi == t.size()) hi = t.size() - 1;
    const std::size_t lo = hi - 1;
    const double dt = t[hi] - t[lo];
    if (dt > options.max_gap && warnings && lo != last_warned) {
      std::ostringstream msg;
      msg << "frequency log gap of " << dt << " s between t=" << t[lo] << " and t=" << t[hi]
          << " s in scan '" << scan.label << "'";
      warnings->push_back(msg.str());
      last_warned = lo;
    }
    sample.drive = dt > 0.0 ? f[lo] + (f[hi] - f[lo]) * (ts - t[lo]) / dt : f[hi];
  }
  return out;
}

BinnedScans bin_scans(const std::vector<ScanRecord>& scans, std::size_t reference,
                      const BinOptions& options) {
  if (scans.empty()) throw BadInput("no scans to bin");
  if (reference >= scans.size()) throw BadInput("reference scan index out of range");

  double overlap_lo = -std::numeric_limits<double>::infinity();
  double overlap_hi = std::numeric_limits<double>::infinity();
  for (const auto& scan : scans) {
    scan.validate();
    if (scan.unit != DriveUnit::Hertz) {
      throw BadInput("scan '" + scan.label + "' is not in frequency units; correlate it first");
    }
    if (!options.merge_directions && scan.direction != scans.front().direction) {
      throw BadInput("up and down scans are binned separately unless merged explicitly");
    }
    const auto [lo, hi] = std::minmax_element(
        scan.samples.begin(), scan.samples.end(),
        [](const ScanSample& a, const ScanSample& b) { return a.drive < b.drive; });
    overlap_lo = std::max(overlap_lo, lo->drive);
    overlap_hi = std::min(overlap_hi, hi->drive);
  }
  if (overlap_lo > overlap_hi) {
    std::ostringstream msg;
    msg << "scans share no frequency range (latest start " << overlap_lo
        << " Hz, earliest end " << overlap_hi << " Hz)";
    throw EmptyOverlap(msg.str());
  }

  const auto& ref = scans[reference].samples;
  const auto [ref_lo, ref_hi] = std::minmax_element(
      ref.begin(), ref.end(),
      [](const ScanSample& a, const ScanSample& b) { return a.drive < b.drive; });
  const std::size_t n = options.bins > 0 ? options.bins : ref.size();
  if (n < 2) throw BadInput("binning needs at least two bins");
  const double lo = ref_lo->drive;
  const double hi = ref_hi->drive;
  if (!(hi > lo)) throw BadInput("reference scan spans no frequency range");

  BinnedScans out;
  out.width = (hi - lo) / static_cast<double>(n - 1);
  out.centers.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.centers[i] = lo + out.width * static_cast<double>(i);
  if (!options.merge_directions) out.direction = scans.front().direction;

  out.counts.assign(scans.size(), std::vector<std::vector<double>>(n));
  for (std::size_t s = 0; s < scans.size(); ++s) {
    out.labels.push_back(scans[s].label);
    for (const auto& sample : scans[s].samples) {
      const double k = std::round((sample.drive - lo) / out.width);
      if (k < 0.0 || k > static_cast<double>(n - 1)) {
        ++out.dropped_samples;
        continue;
      }
      out.counts[s][static_cast<std::size_t>(k)].push_back(sample.counts);
    }
  }
  return out;
}

std::vector<std::size_t> ReducedSpectrum::valid_bins() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_contributing.size(); ++i) {
    if (n_contributing[i] > 0) out.push_back(i);
  }
  return out;
}

ReducedSpectrum threshold_and_average(const BinnedScans& binned, double min_rate) {
  if (!std::isfinite(min_rate) || min_rate < 0.0) {
    throw BadInput("rate threshold must be finite and >= 0");
  }
  const std::size_t n = binned.centers.size();
  ReducedSpectrum out;
  out.bin_centers = binned.centers;
  out.mean_counts.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.n_contributing.assign(n, 0);
  out.n_rejected.assign(n, 0);
  out.direction = binned.direction;
  out.min_rate = min_rate;

  for (std::size_t b = 0; b < n; ++b) {
    double sum_of_means = 0.0;
    for (const auto& scan : binned.counts) {
      double sum = 0.0;
      std::size_t kept = 0;
      for (double c : scan[b]) {
        if (c >= min_rate) {
          sum += c;
          ++kept;
        } else {
          ++out.n_rejected[b];
        }
      }
      if (kept > 0) {
        sum_of_means += sum / static_cast<double>(kept);
        ++out.n_contributing[b];
      }
    }
    if (out.n_contributing[b] > 0) {
      out.mean_counts[b] = sum_of_means / static_cast<double>(out.n_contributing[b]);
    } else {
      out.empty_bins.push_back(b);
    }
  }
  if (out.empty_bins.size() == n) {
    std::ostringstream msg;
    msg << "every bin is empty after dropping samples below " << min_rate << " counts/s";
    throw AllRejected(msg.str());
  }
  return out;
}

ReducedSpectrum center_spectrum(const ReducedSpectrum& spectrum) {
  Curve1D curve;
  for (std::size_t i : spectrum.valid_bins()) {
    curve.x.push_back(spectrum.bin_centers[i]);
    curve.y.push_back(spectrum.mean_counts[i]);
  }
  const double center = fit_gaussian_prefit(curve);
  ReducedSpectrum out = spectrum;
  for (double& c : out.bin_centers) c -= center;
  out.center_frequency += center;
  return out;
}

PopulationSpectrum counts_to_population(const ReducedSpectrum& spectrum, double f_sat,
                                        double background) {
  if (!(f_sat > 0.0) || !std::isfinite(f_sat)) {
    throw BadInput("saturation count rate must be positive");
  }
  if (!std::isfinite(background)) throw BadInput("background must be finite");
  PopulationSpectrum out;
  out.spectrum.kind = SpectrumKind::Population;
  for (std::size_t i : spectrum.valid_bins()) {
    double p = 0.5 * (spectrum.mean_counts[i] - background) / f_sat;
    const std::size_t k = out.spectrum.values.size();
    if (p < 0.0) {
      p = 0.0;
      out.clipped.push_back(k);
    } else if (p > 1.0) {
      out.above_one.push_back(k);
    }
    out.spectrum.detunings_d.push_back(spectrum.bin_centers[i]);
    out.spectrum.values.push_back(p);
  }
  return out;
}

std::vector<Reduction> reduce_scans(const std::vector<ScanRecord>& scans,
                                    const FrequencyLog& log, const ReduceOptions& options) {
  if (scans.empty()) throw BadInput("no scans to reduce");
  std::vector<std::vector<ScanRecord>> groups;
  if (options.bin.merge_directions) {
    groups.emplace_back();
  } else {
    groups.resize(2);
  }
  std::vector<std::string> warnings;
  for (const auto& scan : scans) {
    auto correlated = correlate_frequency(scan, log, options.correlate, &warnings);
    const std::size_t g =
        options.bin.merge_directions ? 0 : (scan.direction == ScanDirection::Up ? 0 : 1);
    groups[g].push_back(std::move(correlated));
  }

  std::vector<Reduction> out;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    Reduction r;
    const auto binned = bin_scans(group, options.reference, options.bin);
    r.dropped_samples = binned.dropped_samples;
    r.scan_labels = binned.labels;
    r.reduced = threshold_and_average(binned, options.min_rate);
    if (options.center) r.reduced = center_spectrum(r.reduced);
    r.population = counts_to_population(r.reduced, options.f_sat, options.background);
    r.warnings = warnings;
    out.push_back(std::move(r));
  }
  return out;
}

double population_to_counts(double population, double f_sat, double background) {
  return 2.0 * f_sat * population + background;
}

}  // namespace cptkit
