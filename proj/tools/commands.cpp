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


#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cptkit/error.hpp"
#include "cptkit/io.hpp"
#include "cptkit/model_select.hpp"
#include "svg.hpp"

#ifndef CPTKIT_VERSION
#define CPTKIT_VERSION "0.0.0"
#endif

namespace cptkit::cli {

using nlohmann::json;

namespace {

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> scaled(const std::vector<double>& v, double factor) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) { return x * factor; });
  return out;
}

std::vector<double> uniform_grid(double half_span, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = -half_span + 2.0 * half_span * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n % 2 == 1) g[n / 2] = 0.0;
  return g;
}

json to_json(const LineFitResult& r) {
  json j;
  j["model"] = to_string(r.model);
  j["names"] = r.names;
  json params = json::object(), errors = json::object();
  for (const auto& n : r.names) {
    params[n] = finite(r.param(n));
    errors[n] = finite(r.error(n));
  }
  j["params"] = params;
  j["param_errors"] = errors;
  json derived = json::object(), derived_errors = json::object();
  for (const auto& [k, v] : r.derived) derived[k] = finite(v);
  for (const auto& [k, v] : r.derived_errors) derived_errors[k] = finite(v);
  j["derived"] = derived;
  j["derived_errors"] = derived_errors;
  json constants = json::object();
  for (const auto& [k, v] : r.constants) constants[k] = finite(v);
  j["constants"] = constants;
  j["fwhm"] = r.fwhm ? finite(*r.fwhm) : json(nullptr);
  j["r_squared"] = finite(r.r_squared);
  j["chi_squared"] = finite(r.chi_squared);
  j["dof"] = r.dof;
  j["flags"] = r.flags;
  json cov = json::array();
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) row.push_back(finite(r.covariance(i, k)));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  return j;
}

std::vector<double> dense_x(const std::vector<double>& x, std::size_t n = 400) {
  std::vector<double> out(n);
  const double lo = x.front(), hi = x.back();
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

LineModel parse_line_model(const std::string& name) {
  for (auto m : {LineModel::Lorentzian, LineModel::DoubleLorentzian, LineModel::InvertedGaussian,
                 LineModel::Exponential, LineModel::Saturation, LineModel::G2})
    if (to_string(m) == name) return m;
  if (name == "inverted_gaussian") return LineModel::InvertedGaussian;
  throw BadInput("unknown line model '" + name +
                 "' (lorentzian, double_lorentzian, gaussian, exponential, saturation, g2)");
}

std::string direction_suffix(const Reduction& r) {
  return r.reduced.direction ? to_string(*r.reduced.direction) : "merged";
}

}  // namespace

json provenance(const std::string& command, const RunConfig& config,
                const std::vector<fs::path>& inputs) {
  json j;
  j["tool"] = "cptkit";
  j["version"] = CPTKIT_VERSION;
  j["command"] = command;
  j["config"] = to_json(config);
  json in = json::array();
  for (const auto& p : inputs)
    in.push_back({{"path", p.generic_string()}, {"sha256", io::sha256_file(p)}});
  j["inputs"] = in;
  return j;
}

void write_json(const fs::path& path, const json& report) {
  io::write_text_file(path, report.dump(2) + "\n");
}

int exit_code(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error))
    return e->category() == ErrorCategory::Validation ? 2 : 3;
  if (dynamic_cast<const json::exception*>(&error)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return 2;
  return 3;
}

json simulate_cpt(const RunConfig& config, const SimulateArgs& args) {
  const auto params = config.cpt_params();
  const auto optical = config.optical();
  const auto grid = config.grid.half_span_hz
                        ? uniform_grid(*config.grid.half_span_hz, config.grid.points)
                        : default_detuning_grid(params, optical, config.grid.points,
                                                config.grid.span_fwhm);
  auto spectrum = simulate_cpt_spectrum(params, optical, grid, config.solver());
  const auto population = spectrum.values;
  if (config.simulate.kind == SpectrumKind::Fluorescence) {
    for (auto& v : spectrum.values)
      v = population_to_counts(v, config.scans.f_sat, config.scans.background);
    spectrum.kind = SpectrumKind::Fluorescence;
  }
  io::write_spectrum_csv(args.output, spectrum);

  json report = provenance("simulate-cpt", config, {});
  const double dip = interpolate_at_zero({grid, population, SpectrumKind::Population});
  const double tail = std::max(population.front(), population.back());
  report["result"] = {{"points", grid.size()},
                      {"output", args.output.generic_string()},
                      {"dip_population", dip},
                      {"tail_population", tail},
                      {"visibility", tail > 0.0 ? 1.0 - dip / tail : 0.0},
                      {"t_plus_ns", 1e9 / params.gamma_plus()},
                      {"t_minus_ps", 1e12 / params.gamma_minus}};
  if (args.report) write_json(*args.report, report);
  if (args.plot) {
    const bool counts = config.simulate.kind == SpectrumKind::Fluorescence;
    write_svg(*args.plot, {"Simulated CPT spectrum", "D detuning (MHz)",
                           counts ? "counts/s" : "excited-state population",
                           {{"model", scaled(grid, 1e-6), spectrum.values, false}}});
  }
  return report;
}

json fit_cpt(const RunConfig& config, const FitCptArgs& args) {
  const auto spectrum = io::read_spectrum_csv(args.input);
  const auto optical = config.optical();
  const auto r = cptkit::fit_cpt(spectrum, optical, config.cpt_params(), config.fit_options());

  json report = provenance("fit-cpt", config, {args.input});
  json fit;
  fit["omega_c_2pi_mhz"] = to_two_pi_mhz(r.params.omega_c);
  fit["omega_d_2pi_mhz"] = to_two_pi_mhz(r.params.omega_d);
  fit["gamma_minus_per_s"] = r.params.gamma_minus;
  fit["gamma_plus_per_s"] = r.params.gamma_plus();
  fit["t_minus_ps"] = r.t_minus * 1e12;
  fit["t_plus_ns"] = r.t_plus * 1e9;
  fit["t_plus_over_t_minus"] = r.t_plus / r.t_minus;
  fit["residual"] = r.residual;
  fit["initial_residual"] = r.initial_residual;
  fit["r_squared"] = finite(r.r_squared);
  fit["dip_population"] = r.dip_population;
  fit["data_dip_population"] = r.data_dip_population;
  fit["tail_detuning_hz"] = r.tail_detuning;
  fit["points"] = r.points;
  fit["evaluations"] = r.evaluations;
  fit["starts"] = r.starts;
  report["fit"] = fit;

  static const std::map<std::string, std::string> units = {{"omega_c", "rad/s"},
                                                           {"omega_d", "rad/s"},
                                                           {"gamma_minus", "1/s"},
                                                           {"t_minus", "s"},
                                                           {"t_plus", "s"}};
  json sens;
  sens["fraction"] = r.uncertainties.fraction;
  json params = json::object();
  for (const auto& p : r.uncertainties.parameters) {
    const auto u = units.find(p.name);
    params[p.name] = {{"value", p.value},
                      {"uncertainty", finite(p.uncertainty)},
                      {"excursion_up", finite(p.excursion_up)},
                      {"excursion_down", finite(p.excursion_down)},
                      {"bounded", p.bounded},
                      {"unit", u == units.end() ? "" : u->second}};
  }
  sens["parameters"] = params;
  sens["all_bounded"] = r.uncertainties.all_bounded();
  report["sensitivity"] = sens;

  if (config.fit.dephasing) {
    try {
      DephasingOptions o;
      o.relative_tolerance = config.fit.dephasing_tolerance;
      const auto b = dephasing_upper_bound(r, config.fit.visibility_drop, o);
      report["dephasing"] = {{"time_ps", b.time * 1e12},
                             {"gamma_deph_per_s", b.gamma_deph},
                             {"baseline_visibility", b.baseline_visibility},
                             {"bound_visibility", b.bound_visibility},
                             {"relative_width", b.relative_width},
                             {"iterations", b.iterations},
                             {"visibility_drop", config.fit.visibility_drop}};
    } catch (const Error& e) {
      report["dephasing"] = {{"error", e.what()}};
      std::cerr << "cptkit: warning: dephasing bound failed: " << e.what() << "\n";
    }
  } else {
    report["dephasing"] = nullptr;
  }
  write_json(args.output, report);

  if (args.plot) {
    write_svg(*args.plot,
              {"CPT fit", "D detuning (MHz)", "excited-state population",
               {{"data", scaled(spectrum.detunings_d, 1e-6), spectrum.values, true},
                {"fit", scaled(spectrum.detunings_d, 1e-6), r.fitted_values, false}}});
  }
  return report;
}

json reduce_scans(const RunConfig& config, const ReduceArgs& args) {
  std::vector<ScanRecord> scans;
  for (const auto& p : args.scans) {
    scans.push_back(io::read_scan_csv(p));
    scans.back().label = p.filename().generic_string();
  }
  const auto log = io::read_frequency_log(args.frequency_log);
  const auto reductions = cptkit::reduce_scans(scans, log, config.reduce_options());

  std::vector<fs::path> inputs = args.scans;
  inputs.push_back(args.frequency_log);
  json report = provenance("reduce-scans", config, inputs);
  json out = json::array();
  Plot plot{"Reduced scans", "detuning (GHz)", "counts/s", {}};
  for (const auto& red : reductions) {
    const std::string suffix = direction_suffix(red);
    const std::string reduced_name = "reduced_" + suffix + ".csv";
    const std::string population_name = "population_" + suffix + ".csv";
    std::ostringstream reduced_csv;
    io::write_reduced_csv(reduced_csv, red.reduced);
    io::write_text_file(args.output_dir / reduced_name, reduced_csv.str());
    io::write_spectrum_csv(args.output_dir / population_name, red.population.spectrum);

    std::size_t rejected = 0;
    for (auto n : red.reduced.n_rejected) rejected += n;
    out.push_back({{"direction", suffix},
                   {"scans", red.scan_labels},
                   {"bins", red.reduced.bin_centers.size()},
                   {"center_frequency_hz", red.reduced.center_frequency},
                   {"empty_bins", red.reduced.empty_bins},
                   {"rejected_samples", rejected},
                   {"dropped_samples", red.dropped_samples},
                   {"clipped_bins", red.population.clipped},
                   {"above_one_bins", red.population.above_one},
                   {"warnings", red.warnings},
                   {"reduced_csv", reduced_name},
                   {"population_csv", population_name}});
    plot.series.push_back({suffix, scaled(red.reduced.bin_centers, 1e-9),
                           red.reduced.mean_counts, true});
  }
  report["reductions"] = out;
  write_json(args.output_dir / "reduce_report.json", report);
  if (args.plot) write_svg(*args.plot, plot);
  return report;
}

json thermal_model(const RunConfig& config, const ThermalArgs& args) {
  const auto series = io::read_thermal_csv(args.input);
  const auto linear_r2 = incremental_r2(series, ModelFamily::linear());
  const auto cubic_r2 = incremental_r2(series, ModelFamily::cubic());
  const auto cutoff = detect_cutoff(linear_r2, series.temperatures);

  json report = provenance("thermal-model", config, {args.input});
  std::vector<std::string> warnings;
  std::size_t n_linear = series.size();
  if (config.thermal.cutoff_points) {
    n_linear = *config.thermal.cutoff_points;
    if (n_linear < 2 || n_linear > series.size())
      throw BadInput("thermal.cutoff_points must lie in [2, " + std::to_string(series.size()) + "]");
  } else if (cutoff) {
    n_linear = cutoff->n_points;
  } else {
    warnings.push_back("no local maximum in the linear R^2 scan; linear fit uses all points");
  }

  const auto linear = fit_thermal_model(series, ModelFamily::linear(), n_linear);
  const auto cubic = fit_thermal_model(series, ModelFamily::cubic(), series.size());
  const double y0 = config.thermal.anchor_hz.value_or(linear.param("b"));
  const auto anchored =
      fit_thermal_model(series, ModelFamily::cubic_anchored(y0), series.size());
  const auto first = first_indices(n_linear);

  report["incremental_r2"] = {{"n_points", linear_r2.n_points},
                              {"linear", linear_r2.r2},
                              {"cubic", cubic_r2.r2}};
  report["cutoff"] = cutoff ? json{{"index", cutoff->index},
                                   {"n_points", cutoff->n_points},
                                   {"temperature_k", cutoff->temperature}}
                            : json(nullptr);
  report["linear_points"] = n_linear;
  report["fits"] = {{"linear", to_json(linear)},
                    {"cubic", to_json(cubic)},
                    {"cubic_anchored", to_json(anchored)}};
  report["total_abs_error_hz"] = {{"points", n_linear},
                                  {"linear", total_abs_error(series, linear, first)},
                                  {"cubic", total_abs_error(series, cubic, first)},
                                  {"cubic_anchored", total_abs_error(series, anchored, first)}};
  report["warnings"] = warnings;
  write_json(args.output, report);

  if (args.plot) {
    const auto xs = dense_x(series.temperatures);
    write_svg(*args.plot, {"Linewidth against temperature", "temperature (K)", "linewidth (MHz)",
                           {{"data", series.temperatures, scaled(series.linewidths, 1e-6), true},
                            {"linear", xs, scaled(linear.evaluate(xs), 1e-6), false},
                            {"cubic", xs, scaled(cubic.evaluate(xs), 1e-6), false},
                            {"cubic anchored", xs, scaled(anchored.evaluate(xs), 1e-6), false}}});
  }
  return report;
}

json d_broadening(const RunConfig& config, const BroadeningArgs& args) {
  const auto req =
      parse_broadening_inputs(read_text(args.input), args.input.generic_string(), config);
  const auto r = phononic_component(req.inputs, req.uncertainties, config.broadening);
  json report = provenance("d-broadening", config, {args.input});
  const auto& in = req.inputs;
  report["inputs_used"] = {{"tau_se_s", in.tau_se},
                           {"branch_ratio", in.branch_ratio},
                           {"p_c_w", in.p_c},
                           {"p_d_w", in.p_d},
                           {"p_sat_w", in.p_sat},
                           {"p_sat_d_w", in.p_sat * in.branch_ratio},
                           {"gamma_c_hz", in.gamma_c_measured},
                           {"gamma_d_hz", in.gamma_d_measured}};
  report["result"] = {{"gamma_c_hom_hz", r.gamma_c_hom},
                      {"gamma_d_hom_hz", r.gamma_d_hom},
                      {"gamma_c_pow_hz", r.gamma_c_pow},
                      {"gamma_d_pow_hz", r.gamma_d_pow},
                      {"gamma_diff_hz", r.gamma_diff},
                      {"gamma_d_phon_hz", r.gamma_d_phon},
                      {"gamma_d_phon_error_hz", r.gamma_d_phon_error},
                      {"subtracted_hz", r.gamma_d_hom + r.gamma_d_pow + r.gamma_diff},
                      {"t_minus_d_ps", r.t_minus_d * 1e12},
                      {"t_minus_d_error_ps", r.t_minus_d_error * 1e12},
                      {"convention", to_string(r.convention)},
                      {"assumptions", r.assumptions}};
  write_json(args.output, report);
  return report;
}

json fit_line(const RunConfig& config, const FitLineArgs& args) {
  const auto model = parse_line_model(args.model);
  const auto data = io::read_curve_csv(args.input);
  auto options = config.curvefit;
  const auto r = cptkit::fit_line(model, data, options);
  json report = provenance("fit-line", config, {args.input});
  report["fit"] = to_json(r);
  write_json(args.output, report);
  if (args.plot) {
    const auto xs = dense_x(data.x);
    write_svg(*args.plot, {to_string(model) + " fit", "x", "y",
                           {{"data", data.x, data.y, true}, {"fit", xs, r.evaluate(xs), false}}});
  }
  return report;
}

json batch(const RunConfig& config, const BatchArgs& args) {
  const auto entries = parse_manifest(read_text(args.manifest), args.manifest.generic_string(),
                                      args.manifest.parent_path(), config);
  std::vector<json> results(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto run_one = [&](std::size_t i) {
    const auto& e = entries[i];
    RunConfig cfg = config;
    cfg.cpt = e.initial;
    json powers = json::object();
    for (const auto& [k, v] : e.powers_nw) powers[k] = v;
    json result = {{"name", e.name}, {"powers_nw", powers}, {"output_dir", e.output_dir.generic_string()}};
    try {
      ReduceArgs ra{e.scans, e.frequency_log, e.output_dir, std::nullopt};
      if (args.plot) ra.plot = e.output_dir / "reduced.svg";
      const auto reduced = reduce_scans(cfg, ra);
      json fits = json::object();
      for (const auto& red : reduced["reductions"]) {
        const std::string dir = red["direction"];
        FitCptArgs fa{e.output_dir / red["population_csv"].get<std::string>(),
                      e.output_dir / ("fit_" + dir + ".json"), std::nullopt};
        if (args.plot) fa.plot = e.output_dir / ("fit_" + dir + ".svg");
        const auto fit = fit_cpt(cfg, fa);
        fits[dir] = {{"omega_c_2pi_mhz", fit["fit"]["omega_c_2pi_mhz"]},
                     {"omega_d_2pi_mhz", fit["fit"]["omega_d_2pi_mhz"]},
                     {"t_minus_ps", fit["fit"]["t_minus_ps"]},
                     {"t_plus_ns", fit["fit"]["t_plus_ns"]},
                     {"t_minus_uncertainty_ps",
                      fit["sensitivity"]["parameters"]["t_minus"]["uncertainty"].is_null()
                          ? json(nullptr)
                          : json(fit["sensitivity"]["parameters"]["t_minus"]["uncertainty"]
                                     .get<double>() * 1e12)},
                     {"report", "fit_" + dir + ".json"}};
      }
      result["status"] = "ok";
      result["exit_code"] = 0;
      result["fits"] = fits;
    } catch (const std::exception& ex) {
      result["status"] = "failed";
      result["exit_code"] = exit_code(ex);
      result["error"] = ex.what();
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "cptkit: dataset " << e.name << " failed: " << ex.what() << "\n";
    }
    results[i] = std::move(result);
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(args.jobs, static_cast<unsigned>(entries.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < entries.size(); i = next++) run_one(i);
    });
  for (auto& t : pool) t.join();

  json report = provenance("batch", config, {args.manifest});
  std::vector<double> t_minus, t_plus;
  int worst = 0;
  for (const auto& r : results) {
    worst = std::max(worst, r["exit_code"].get<int>());
    if (!r.contains("fits")) continue;
    for (const auto& [dir, f] : r["fits"].items()) {
      t_minus.push_back(f["t_minus_ps"].get<double>());
      t_plus.push_back(f["t_plus_ns"].get<double>());
    }
  }
  auto stats = [](const std::vector<double>& v) -> json {
    if (v.empty()) return nullptr;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return {{"mean", mean}, {"std", sd}, {"count", v.size()}};
  };
  report["datasets"] = results;
  report["t_minus_ps"] = stats(t_minus);
  report["t_plus_ns"] = stats(t_plus);
  report["exit_code"] = worst;
  write_json(args.output, report);
  return report;
}

}  // namespace cptkit::cli
