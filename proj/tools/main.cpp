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


// cptkit command-line front end.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace cptkit::cli;

struct Common {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig c = config ? load_config(*config) : RunConfig{};
    if (seed) c.seed = *seed;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "random seed, overrides the config");
}

std::optional<fs::path>* add_plot(CLI::App* cmd, std::optional<fs::path>& plot) {
  cmd->add_option("--plot", plot, "write an SVG plot to this path");
  return &plot;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent population trapping analysis tools"};
  app.set_version_flag("--version", std::string(CPTKIT_VERSION));
  app.require_subcommand(1);

  Common common;
  std::function<void(const RunConfig&)> action;

  auto* sim = app.add_subcommand("simulate-cpt", "simulate a CPT spectrum from the config");
  add_common(sim, common);
  SimulateArgs sim_args;
  sim->add_option("-o,--output", sim_args.output, "spectrum CSV")->required();
  sim->add_option("--report", sim_args.report, "JSON report");
  add_plot(sim, sim_args.plot);
  sim->callback([&] { action = [&](const RunConfig& c) { simulate_cpt(c, sim_args); }; });

  auto* fit = app.add_subcommand("fit-cpt", "fit the three-level model to a population spectrum");
  add_common(fit, common);
  FitCptArgs fit_args;
  fit->add_option("spectrum", fit_args.input, "detuning_hz,population CSV")->required();
  fit->add_option("-o,--output", fit_args.output, "JSON report")->required();
  add_plot(fit, fit_args.plot);
  fit->callback([&] { action = [&](const RunConfig& c) { fit_cpt(c, fit_args); }; });

  auto* red = app.add_subcommand("reduce-scans", "turn raw line scans into a population spectrum");
  add_common(red, common);
  ReduceArgs red_args;
  red->add_option("scans", red_args.scans, "scan CSV files")->required();
  red->add_option("--log", red_args.frequency_log, "wavemeter log CSV")->required();
  red->add_option("-o,--output-dir", red_args.output_dir, "output directory")->required();
  add_plot(red, red_args.plot);
  red->callback([&] { action = [&](const RunConfig& c) { reduce_scans(c, red_args); }; });

  auto* th = app.add_subcommand("thermal-model", "linear and cubic linewidth-temperature models");
  add_common(th, common);
  ThermalArgs th_args;
  th->add_option("series", th_args.input, "temperature_K,linewidth_MHz,error_MHz CSV")->required();
  th->add_option("-o,--output", th_args.output, "JSON report")->required();
  add_plot(th, th_args.plot);
  th->callback([&] { action = [&](const RunConfig& c) { thermal_model(c, th_args); }; });

  auto* db = app.add_subcommand("d-broadening", "split the D linewidth into its components");
  add_common(db, common);
  BroadeningArgs db_args;
  db->add_option("inputs", db_args.input, "JSON inputs")->required();
  db->add_option("-o,--output", db_args.output, "JSON report")->required();
  db->callback([&] { action = [&](const RunConfig& c) { d_broadening(c, db_args); }; });

  auto* fl = app.add_subcommand("fit-line", "fit a line shape to a curve");
  add_common(fl, common);
  FitLineArgs fl_args;
  fl->add_option("curve", fl_args.input, "x,y[,y_err] CSV")->required();
  fl->add_option("-m,--model", fl_args.model,
                 "lorentzian, double_lorentzian, gaussian, exponential, saturation or g2")
      ->required();
  fl->add_option("-o,--output", fl_args.output, "JSON report")->required();
  add_plot(fl, fl_args.plot);
  fl->callback([&] { action = [&](const RunConfig& c) { fit_line(c, fl_args); }; });

  auto* bt = app.add_subcommand("batch", "reduce and fit every dataset in a manifest");
  add_common(bt, common);
  BatchArgs bt_args;
  bool batch_failed = false;
  int batch_code = 0;
  bt->add_option("manifest", bt_args.manifest, "JSON manifest")->required();
  bt->add_option("-o,--output", bt_args.output, "JSON summary")->required();
  bt->add_option("-j,--jobs", bt_args.jobs, "parallel datasets")->check(CLI::PositiveNumber);
  bt->add_flag("--plot", bt_args.plot, "write SVG plots next to each dataset's outputs");
  bt->callback([&] {
    action = [&](const RunConfig& c) {
      const auto report = batch(c, bt_args);
      batch_code = report["exit_code"].get<int>();
      batch_failed = batch_code != 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action(common.load());
  } catch (const std::exception& e) {
    std::cerr << "cptkit: error: " << e.what() << "\n";
    return exit_code(e);
  }
  return batch_failed ? batch_code : 0;
}
