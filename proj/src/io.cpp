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


#include "cptkit/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "cptkit/error.hpp"

namespace cptkit::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << name << ":" << line << ": " << what;
  throw BadInput(msg.str());
}

double parse_number(const std::string& text, const std::string& name, std::size_t line) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    fail(name, line, "'" + text + "' is not a number");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInput("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BadInput("cannot write '" + path.string() + "'");
  return out;
}

std::vector<double> column(const CsvTable& t, std::size_t c) {
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& r : t.rows) v.push_back(r[c]);
  return v;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& name) {
  CsvTable table;
  table.path = name;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      table.comments.push_back(trim(std::string_view(text).substr(1)));
      continue;
    }
    auto fields = split(text, ',');
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      std::ostringstream msg;
      msg << "expected " << table.header.size() << " fields, found " << fields.size();
      fail(name, number, msg.str());
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, name, number));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(number);
  }
  if (table.header.empty()) throw BadInput(name + ": missing header line");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_csv(in, path.string());
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected) {
  if (table.header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    std::string got;
    for (std::size_t i = 0; i < table.header.size(); ++i)
      got += (i ? "," : "") + table.header[i];
    throw BadInput(table.path + ": header '" + got + "' should be '" + want + "'");
  }
}

ScanRecord read_scan_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  require_header(table, {"timestamp_s", "drive", "counts_per_s"});
  ScanRecord scan;
  scan.label = path.filename().string();
  bool have_direction = false, have_unit = false;
  for (const auto& comment : table.comments) {
    for (const auto& item : split(comment, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(item).substr(0, eq));
      const std::string value = trim(std::string_view(item).substr(eq + 1));
      if (key == "direction") {
        if (value == "up") scan.direction = ScanDirection::Up;
        else if (value == "down") scan.direction = ScanDirection::Down;
        else throw BadInput(path.string() + ": direction must be up or down, got '" + value + "'");
        have_direction = true;
      } else if (key == "drive_unit") {
        if (value == "V") scan.unit = DriveUnit::Volt;
        else if (value == "Hz") scan.unit = DriveUnit::Hertz;
        else throw BadInput(path.string() + ": drive_unit must be V or Hz, got '" + value + "'");
        have_unit = true;
      }
    }
  }
  if (!have_direction || !have_unit) {
    throw BadInput(path.string() + ": missing '# direction=..., drive_unit=...' metadata line");
  }
  for (const auto& r : table.rows) scan.samples.push_back({r[0], r[1], r[2]});
  scan.validate();
  return scan;
}

void write_scan_csv(const std::filesystem::path& path, const ScanRecord& scan) {
  std::ostringstream out;
  out << "# direction=" << to_string(scan.direction) << ", drive_unit=" << to_string(scan.unit)
      << "\n";
  out << "timestamp_s,drive,counts_per_s\n";
  for (const auto& s : scan.samples) {
    out << format_double(s.timestamp) << "," << format_double(s.drive) << ","
        << format_double(s.counts) << "\n";
  }
  write_text_file(path, out.str());
}

FrequencyLog read_frequency_log(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  require_header(table, {"timestamp_s", "frequency_hz"});
  FrequencyLog log{column(table, 0), column(table, 1)};
  log.validate();
  return log;
}

void write_frequency_log(const std::filesystem::path& path, const FrequencyLog& log) {
  std::ostringstream out;
  out << "timestamp_s,frequency_hz\n";
  for (std::size_t i = 0; i < log.timestamps.size(); ++i) {
    out << format_double(log.timestamps[i]) << "," << format_double(log.frequencies[i]) << "\n";
  }
  write_text_file(path, out.str());
}

CptSpectrum read_spectrum_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  CptSpectrum s;
  if (table.header == std::vector<std::string>{"detuning_hz", "population"}) {
    s.kind = SpectrumKind::Population;
  } else if (table.header == std::vector<std::string>{"detuning_hz", "fluorescence"}) {
    s.kind = SpectrumKind::Fluorescence;
  } else {
    require_header(table, {"detuning_hz", "population"});
  }
  s.detunings_d = column(table, 0);
  s.values = column(table, 1);
  s.validate();
  return s;
}

void write_spectrum_csv(std::ostream& out, const CptSpectrum& spectrum) {
  out << "detuning_hz,"
      << (spectrum.kind == SpectrumKind::Population ? "population" : "fluorescence") << "\n";
  for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
    out << format_double(spectrum.detunings_d[i]) << "," << format_double(spectrum.values[i])
        << "\n";
  }
}

void write_spectrum_csv(const std::filesystem::path& path, const CptSpectrum& spectrum) {
  std::ostringstream out;
  write_spectrum_csv(out, spectrum);
  write_text_file(path, out.str());
}

void write_reduced_csv(std::ostream& out, const ReducedSpectrum& spectrum) {
  out << "bin_center_hz,mean_counts_per_s,n_contributing,n_rejected\n";
  for (std::size_t i = 0; i < spectrum.bin_centers.size(); ++i) {
    const double m = spectrum.mean_counts[i];
    out << format_double(spectrum.bin_centers[i]) << ","
        << (std::isnan(m) ? std::string("nan") : format_double(m)) << ","
        << spectrum.n_contributing[i] << "," << spectrum.n_rejected[i] << "\n";
  }
}

Curve1D read_curve_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.header.size() != 2 && table.header.size() != 3) {
    throw BadInput(path.string() + ": curve files have columns x,y or x,y,y_err");
  }
  Curve1D c;
  c.x = column(table, 0);
  c.y = column(table, 1);
  if (table.header.size() == 3) c.y_err = column(table, 2);
  c.validate();
  return c;
}

ThermalSeries read_thermal_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  require_header(table, {"temperature_K", "linewidth_MHz", "error_MHz"});
  ThermalSeries s;
  for (const auto& r : table.rows) {
    s.temperatures.push_back(r[0]);
    s.linewidths.push_back(r[1] * 1e6);
    s.linewidth_errors.push_back(r[2] * 1e6);
  }
  s.validate();
  return s;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";  // also folds -0
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw NumericalInstability("cannot format number");
  return std::string(buf.data(), ptr);
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalInstability("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto out = open_output(tmp);
    out << text;
    if (!out) throw BadInput("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cptkit::io
