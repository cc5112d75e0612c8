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


#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "cptkit/error.hpp"

namespace cptkit::cli {

using nlohmann::json;

namespace {

std::size_t line_at(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct Source {
  std::string text;
  std::string name;

  // Line of the innermost key, found by walking the quoted names in order.
  std::size_t line_of(const std::vector<std::string>& keys) const {
    std::size_t pos = 0;
    for (const auto& k : keys) {
      const auto hit = text.find("\"" + k + "\"", pos);
      if (hit == std::string::npos) break;
      pos = hit;
    }
    return line_at(text, pos);
  }
};

class Reader {
 public:
  Reader(const json& node, std::vector<std::string> path, const Source& source)
      : node_(node), path_(std::move(path)), source_(source) {
    if (!node_.is_object()) fail(path_, "expects an object");
  }

  Reader section(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = node_.find(key);
    return Reader(it == node_.end() ? empty : *it, child(key), source_);
  }

  void number(const std::string& key, double& out, bool positive = true) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number()) fail(child(key), "expects a number");
    const double x = v->get<double>();
    if (positive && !(x > 0.0)) fail(child(key), "must be positive");
    if (!positive && !(x >= 0.0)) fail(child(key), "must be non-negative");
    out = x;
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    const json* v = take(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    if (!v->is_number()) fail(child(key), "expects a number or null");
    out = v->get<double>();
  }

  template <class Int>
  void integer(const std::string& key, Int& out, Int min_value = 0) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_unsigned()) fail(child(key), "expects a non-negative integer");
    const auto x = v->get<std::uint64_t>();
    if (x < static_cast<std::uint64_t>(min_value))
      fail(child(key), "must be at least " + std::to_string(min_value));
    out = static_cast<Int>(x);
  }

  void optional_integer(const std::string& key, std::optional<std::size_t>& out) {
    const json* v = take(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    if (!v->is_number_unsigned()) fail(child(key), "expects a non-negative integer or null");
    out = v->get<std::size_t>();
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_boolean()) fail(child(key), "expects true or false");
    out = v->get<bool>();
  }

  template <class Enum>
  void choice(const std::string& key, Enum& out,
              const std::vector<std::pair<std::string, Enum>>& options) {
    const json* v = take(key);
    if (!v) return;
    std::string names;
    for (const auto& [name, value] : options) {
      if (v->is_string() && v->get<std::string>() == name) {
        out = value;
        return;
      }
      names += (names.empty() ? "" : ", ") + name;
    }
    fail(child(key), "expects one of " + names);
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    const json* v = take(key);
    if (!v) {
      if (required) fail(path_, "is missing '" + key + "'");
      return;
    }
    if (!v->is_string() || v->get<std::string>().empty())
      fail(child(key), "expects a non-empty string");
    out = v->get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key) {
    const json* v = take(key);
    if (!v) fail(path_, "is missing '" + key + "'");
    if (!v->is_array() || v->empty()) fail(child(key), "expects a non-empty array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string()) fail(child(key), "expects a non-empty array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void required_number(const std::string& key, double& out, bool positive = true) {
    if (!node_.contains(key)) fail(path_, "is missing '" + key + "'");
    number(key, out, positive);
  }

  void accept(const std::string& key) { seen_.insert(key); }

  bool has(const std::string& key) const { return node_.contains(key); }

  /// Numeric members in key order.
  std::vector<std::pair<std::string, double>> numbers(const std::string& key) {
    auto r = section(key);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [k, v] : r.node_.items()) {
      double x = 0.0;
      r.number(k, x, false);
      out.emplace_back(k, x);
    }
    return out;
  }

  const json& node() const { return node_; }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) fail(child(key), "unknown key");
  }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::vector<std::string> child(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return p;
  }

  [[noreturn]] void fail(const std::vector<std::string>& keys, const std::string& msg) const {
    std::string dotted;
    for (const auto& k : keys) dotted += (dotted.empty() ? "" : ".") + k;
    throw ConfigError(source_.name + ":" + std::to_string(source_.line_of(keys)) + ": '" +
                      dotted + "' " + msg);
  }

  const json& node_;
  std::vector<std::string> path_;
  const Source& source_;
  std::set<std::string> seen_;
};

const std::vector<std::pair<std::string, SpectrumKind>> kKinds = {
    {"population", SpectrumKind::Population}, {"fluorescence", SpectrumKind::Fluorescence}};
const std::vector<std::pair<std::string, SteadyStateMethod>> kSolvers = {
    {"direct", SteadyStateMethod::Direct}, {"integrate", SteadyStateMethod::Integrate}};
const std::vector<std::pair<std::string, HomogeneousConvention>> kConventions = {
    {"partial_rate", HomogeneousConvention::PartialRate},
    {"inverse_fraction", HomogeneousConvention::InverseFraction}};

template <class Enum>
std::string name_of(Enum value, const std::vector<std::pair<std::string, Enum>>& options) {
  for (const auto& [name, v] : options)
    if (v == value) return name;
  return "unknown";
}

json optional_json(const auto& value) {
  return value ? json(*value) : json(nullptr);
}

json parse_json(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(name + ":" + std::to_string(line_at(text, e.byte ? e.byte - 1 : 0)) +
                      ": invalid JSON: " + e.what());
  }
}

}  // namespace

OpticalRates RunConfig::optical() const {
  return OpticalRates::from_lifetime(system.tau_se_s, system.branch_ratio);
}

CptFitParams RunConfig::cpt_params() const {
  CptFitParams p;
  p.omega_c = two_pi_mhz(cpt.omega_c_2pi_mhz);
  p.omega_d = two_pi_mhz(cpt.omega_d_2pi_mhz);
  p.gamma_minus = 1.0 / (cpt.t_minus_ps * 1e-12);
  p.gamma_deph = cpt.gamma_deph_per_s;
  p.delta_12 = system.delta_12_hz;
  p.temperature = system.temperature_k;
  p.constants = constants;
  return p;
}

SteadyStateOptions RunConfig::solver() const {
  SteadyStateOptions o;
  o.method = simulate.solver;
  return o;
}

CptFitOptions RunConfig::fit_options() const {
  CptFitOptions o;
  o.starts = fit.starts;
  o.seed = seed;
  o.gamma_minus_min = fit.gamma_minus_min_per_s;
  o.gamma_minus_max = fit.gamma_minus_max_per_s;
  o.omega_spread = fit.omega_spread;
  o.simplex.max_evaluations = fit.max_evaluations;
  o.sensitivity_fraction = fit.sensitivity_fraction;
  return o;
}

ReduceOptions RunConfig::reduce_options() const {
  ReduceOptions o;
  o.correlate.max_gap = scans.max_gap_s;
  o.bin.bins = scans.bins;
  o.bin.merge_directions = scans.merge_directions;
  o.reference = scans.reference;
  o.min_rate = scans.min_rate;
  o.center = scans.center;
  o.f_sat = scans.f_sat;
  o.background = scans.background;
  return o;
}

RunConfig parse_config(const std::string& text, const std::string& name) {
  const Source source{text, name};
  const json root = parse_json(text, name);

  RunConfig c;
  Reader top(root, {}, source);
  top.integer("seed", c.seed);
  {
    auto r = top.section("constants");
    r.number("planck", c.constants.planck);
    r.number("boltzmann", c.constants.boltzmann);
    r.finish();
  }
  {
    auto r = top.section("system");
    r.number("delta_12_hz", c.system.delta_12_hz);
    r.number("temperature_k", c.system.temperature_k);
    r.number("branch_ratio", c.system.branch_ratio);
    r.number("tau_se_s", c.system.tau_se_s);
    r.finish();
  }
  {
    auto r = top.section("cpt");
    r.number("omega_c_2pi_mhz", c.cpt.omega_c_2pi_mhz, false);
    r.number("omega_d_2pi_mhz", c.cpt.omega_d_2pi_mhz, false);
    r.number("t_minus_ps", c.cpt.t_minus_ps);
    r.number("gamma_deph_per_s", c.cpt.gamma_deph_per_s, false);
    r.finish();
  }
  {
    auto r = top.section("grid");
    r.integer("points", c.grid.points, std::size_t{3});
    r.number("span_fwhm", c.grid.span_fwhm);
    r.optional_number("half_span_hz", c.grid.half_span_hz);
    r.finish();
  }
  {
    auto r = top.section("simulate");
    r.choice("kind", c.simulate.kind, kKinds);
    r.choice("solver", c.simulate.solver, kSolvers);
    r.finish();
  }
  {
    auto r = top.section("fit");
    r.integer("starts", c.fit.starts, std::size_t{1});
    r.number("gamma_minus_min_per_s", c.fit.gamma_minus_min_per_s);
    r.number("gamma_minus_max_per_s", c.fit.gamma_minus_max_per_s);
    r.number("omega_spread", c.fit.omega_spread);
    r.integer("max_evaluations", c.fit.max_evaluations, std::size_t{10});
    r.number("sensitivity_fraction", c.fit.sensitivity_fraction);
    r.boolean("dephasing", c.fit.dephasing);
    r.number("visibility_drop", c.fit.visibility_drop);
    r.number("dephasing_tolerance", c.fit.dephasing_tolerance);
    r.finish();
  }
  {
    auto r = top.section("scans");
    r.number("min_rate", c.scans.min_rate, false);
    r.integer("bins", c.scans.bins);
    r.boolean("merge_directions", c.scans.merge_directions);
    r.number("max_gap_s", c.scans.max_gap_s);
    r.integer("reference", c.scans.reference);
    r.boolean("center", c.scans.center);
    r.number("f_sat", c.scans.f_sat);
    r.number("background", c.scans.background, false);
    r.finish();
  }
  {
    auto r = top.section("thermal");
    r.optional_integer("cutoff_points", c.thermal.cutoff_points);
    r.optional_number("anchor_hz", c.thermal.anchor_hz);
    r.finish();
  }
  {
    auto r = top.section("curvefit");
    r.boolean("use_weights", c.curvefit.use_weights);
    r.integer("max_evaluations", c.curvefit.max_evaluations, std::size_t{10});
    r.boolean("strict_degenerate", c.curvefit.strict_degenerate);
    r.number("saturation_background", c.curvefit.saturation_background, false);
    r.number("poor_fit_r_squared", c.curvefit.poor_fit_r_squared, false);
    r.finish();
  }
  {
    auto r = top.section("broadening");
    r.choice("convention", c.broadening, kConventions);
    r.finish();
  }
  top.finish();

  if (c.fit.gamma_minus_min_per_s >= c.fit.gamma_minus_max_per_s)
    throw ConfigError(name + ":" + std::to_string(source.line_of({"fit", "gamma_minus_min_per_s"})) +
                      ": 'fit.gamma_minus_min_per_s' must be below 'fit.gamma_minus_max_per_s'");
  return c;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInput("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.string());
}

BroadeningRequest parse_broadening_inputs(const std::string& text, const std::string& name,
                                          const RunConfig& config) {
  const Source source{text, name};
  const json root = parse_json(text, name);
  BroadeningRequest req;
  auto& in = req.inputs;
  in.tau_se = config.system.tau_se_s;
  in.branch_ratio = config.system.branch_ratio;
  Reader r(root, {}, source);
  r.number("tau_se_s", in.tau_se);
  r.number("branch_ratio", in.branch_ratio);
  r.required_number("p_c_w", in.p_c, false);
  r.required_number("p_d_w", in.p_d, false);
  r.required_number("p_sat_w", in.p_sat);
  r.required_number("gamma_c_hz", in.gamma_c_measured);
  r.required_number("gamma_d_hz", in.gamma_d_measured);
  auto u = r.section("uncertainties");
  auto& e = req.uncertainties;
  u.number("tau_se_s", e.tau_se, false);
  u.number("branch_ratio", e.branch_ratio, false);
  u.number("p_c_w", e.p_c, false);
  u.number("p_d_w", e.p_d, false);
  u.number("p_sat_w", e.p_sat, false);
  u.number("gamma_c_hz", e.gamma_c_measured, false);
  u.number("gamma_d_hz", e.gamma_d_measured, false);
  u.finish();
  r.finish();
  return req;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& name,
                                          const std::filesystem::path& base_dir,
                                          const RunConfig& config) {
  const Source source{text, name};
  const json root = parse_json(text, name);
  Reader top(root, {}, source);
  if (!root.contains("datasets") || !root["datasets"].is_array() || root["datasets"].empty())
    throw ConfigError(name + ":1: 'datasets' expects a non-empty array");
  top.accept("datasets");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<ManifestEntry> out;
  std::set<std::string> names;
  const auto& list = root["datasets"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    Reader r(list[i], {"datasets", std::to_string(i)}, source);
    ManifestEntry e;
    r.string("name", e.name, true);
    if (!names.insert(e.name).second)
      throw ConfigError(name + ":" + std::to_string(source.line_of({e.name})) +
                        ": duplicate dataset name '" + e.name + "'");
    for (const auto& s : r.strings("scans")) e.scans.push_back(resolve(s));
    std::string log, dir;
    r.string("frequency_log", log, true);
    r.string("output_dir", dir, true);
    e.frequency_log = resolve(log);
    e.output_dir = resolve(dir);
    if (r.has("powers_nw")) e.powers_nw = r.numbers("powers_nw");
    e.initial = config.cpt;
    auto init = r.section("initial");
    init.number("omega_c_2pi_mhz", e.initial.omega_c_2pi_mhz);
    init.number("omega_d_2pi_mhz", e.initial.omega_d_2pi_mhz);
    init.number("t_minus_ps", e.initial.t_minus_ps);
    init.finish();
    r.finish();
    out.push_back(std::move(e));
  }
  top.finish();
  return out;
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["constants"] = {{"planck", c.constants.planck}, {"boltzmann", c.constants.boltzmann}};
  j["system"] = {{"delta_12_hz", c.system.delta_12_hz},
                 {"temperature_k", c.system.temperature_k},
                 {"branch_ratio", c.system.branch_ratio},
                 {"tau_se_s", c.system.tau_se_s}};
  j["cpt"] = {{"omega_c_2pi_mhz", c.cpt.omega_c_2pi_mhz},
              {"omega_d_2pi_mhz", c.cpt.omega_d_2pi_mhz},
              {"t_minus_ps", c.cpt.t_minus_ps},
              {"gamma_deph_per_s", c.cpt.gamma_deph_per_s}};
  j["grid"] = {{"points", c.grid.points},
               {"span_fwhm", c.grid.span_fwhm},
               {"half_span_hz", optional_json(c.grid.half_span_hz)}};
  j["simulate"] = {{"kind", name_of(c.simulate.kind, kKinds)},
                   {"solver", name_of(c.simulate.solver, kSolvers)}};
  j["fit"] = {{"starts", c.fit.starts},
              {"gamma_minus_min_per_s", c.fit.gamma_minus_min_per_s},
              {"gamma_minus_max_per_s", c.fit.gamma_minus_max_per_s},
              {"omega_spread", c.fit.omega_spread},
              {"max_evaluations", c.fit.max_evaluations},
              {"sensitivity_fraction", c.fit.sensitivity_fraction},
              {"dephasing", c.fit.dephasing},
              {"visibility_drop", c.fit.visibility_drop},
              {"dephasing_tolerance", c.fit.dephasing_tolerance}};
  j["scans"] = {{"min_rate", c.scans.min_rate},
                {"bins", c.scans.bins},
                {"merge_directions", c.scans.merge_directions},
                {"max_gap_s", c.scans.max_gap_s},
                {"reference", c.scans.reference},
                {"center", c.scans.center},
                {"f_sat", c.scans.f_sat},
                {"background", c.scans.background}};
  j["thermal"] = {{"cutoff_points", optional_json(c.thermal.cutoff_points)},
                  {"anchor_hz", optional_json(c.thermal.anchor_hz)}};
  j["curvefit"] = {{"use_weights", c.curvefit.use_weights},
                   {"max_evaluations", c.curvefit.max_evaluations},
                   {"strict_degenerate", c.curvefit.strict_degenerate},
                   {"saturation_background", c.curvefit.saturation_background},
                   {"poor_fit_r_squared", c.curvefit.poor_fit_r_squared}};
  j["broadening"] = {{"convention", name_of(c.broadening, kConventions)}};
  return j;
}

}  // namespace cptkit::cli
