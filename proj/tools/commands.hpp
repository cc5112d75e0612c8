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


// Subcommand implementations. Each writes its outputs and returns the JSON
// report; failures propagate as cptkit::Error.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace cptkit::cli {

namespace fs = std::filesystem;

/// Tool name, version, command, effective config and input hashes.
nlohmann::json provenance(const std::string& command, const RunConfig& config,
                          const std::vector<fs::path>& inputs);

/// Two-space indented JSON with a trailing newline.
void write_json(const fs::path& path, const nlohmann::json& report);

/// 0 on success, 2 for input and validation errors, 3 for numerical ones.
int exit_code(const std::exception& error);

struct SimulateArgs {
  fs::path output;
  std::optional<fs::path> report;
  std::optional<fs::path> plot;
};
nlohmann::json simulate_cpt(const RunConfig& config, const SimulateArgs& args);

struct FitCptArgs {
  fs::path input;
  fs::path output;
  std::optional<fs::path> plot;
};
nlohmann::json fit_cpt(const RunConfig& config, const FitCptArgs& args);

struct ReduceArgs {
  std::vector<fs::path> scans;
  fs::path frequency_log;
  fs::path output_dir;
  std::optional<fs::path> plot;
};
nlohmann::json reduce_scans(const RunConfig& config, const ReduceArgs& args);

struct ThermalArgs {
  fs::path input;
  fs::path output;
  std::optional<fs::path> plot;
};
nlohmann::json thermal_model(const RunConfig& config, const ThermalArgs& args);

struct BroadeningArgs {
  fs::path input;
  fs::path output;
};
nlohmann::json d_broadening(const RunConfig& config, const BroadeningArgs& args);

struct FitLineArgs {
  fs::path input;
  std::string model;
  fs::path output;
  std::optional<fs::path> plot;
};
nlohmann::json fit_line(const RunConfig& config, const FitLineArgs& args);

struct BatchArgs {
  fs::path manifest;
  fs::path output;
  unsigned jobs = 1;
  bool plot = false;
};
/// Runs reduce-scans and fit-cpt per dataset. Returns the summary; its
/// "exit_code" is the worst code over all datasets.
nlohmann::json batch(const RunConfig& config, const BatchArgs& args);

}  // namespace cptkit::cli
