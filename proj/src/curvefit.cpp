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

#include "cptkit/curvefit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/LU>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include "cptkit/error.hpp"
#include "cptkit/nelder_mead.hpp"

namespace cptkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

// How a parameter transforms when x and y are rescaled.
enum class Kind { Amplitude, Width, Center, Dimensionless };

using ModelFn = std::function<double(double, const Eigen::VectorXd&)>;

struct ModelDef {
  LineModel model;
  std::vector<std::string> names;
  std::vector<Kind> kinds;
  ModelFn f;  // physical units
  bool shift_x = true;
  bool scale_y = true;
};

struct Scaling {
  double x_shift = 0.0;
  double x_scale = 1.0;
  double y_scale = 1.0;

  double factor(Kind k) const {
    switch (k) {
      case Kind::Amplitude: return y_scale;
      case Kind::Width:
      case Kind::Center: return x_scale;
      case Kind::Dimensionless: return 1.0;
    }
    return 1.0;
  }
  double to_physical(Kind k, double q) const {
    return k == Kind::Center ? q * x_scale + x_shift : q * factor(k);
  }
  double to_normalized(Kind k, double p) const {
    return k == Kind::Center ? (p - x_shift) / x_scale : p / factor(k);
  }
};

struct Problem {
  const ModelDef* def = nullptr;
  Scaling scaling;
  std::vector<double> x;  // physical
  std::vector<double> y;  // normalized
  std::vector<double> w;  // inverse normalized sigma

  Eigen::VectorXd physical(const Eigen::VectorXd& q) const {
    Eigen::VectorXd p(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i)
      p[i] = scaling.to_physical(def->kinds[i], q[i]);
    return p;
  }
  Eigen::VectorXd normalized(const Eigen::VectorXd& p) const {
    Eigen::VectorXd q(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i)
      q[i] = scaling.to_normalized(def->kinds[i], p[i]);
    return q;
  }
  void residuals(const Eigen::VectorXd& q, Eigen::VectorXd& r) const {
    const Eigen::VectorXd p = physical(q);
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] =
          w[i] * (y[i] - def->f(x[i], p) / scaling.y_scale);
    }
  }
  double sum_squares(const Eigen::VectorXd& q) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    residuals(q, r);
    const double s = r.squaredNorm();
    return std::isfinite(s) ? s : kInf;
  }
};

struct LmFunctor : Eigen::DenseFunctor<double> {
  LmFunctor(const Problem* p, int n_params)
      : Eigen::DenseFunctor<double>(n_params, static_cast<int>(p->x.size())), problem(p) {}

  int operator()(const Eigen::VectorXd& q, Eigen::VectorXd& r) const {
    problem->residuals(q, r);
    return 0;
  }

  const Problem* problem;
};

struct Solution {
  Eigen::VectorXd q;
  double chi2 = kInf;
  bool fallback = false;
};

Solution solve(const Problem& problem, const Eigen::VectorXd& q0,
               std::size_t max_evaluations) {
  Solution best;
  LmFunctor functor(&problem, static_cast<int>(q0.size()));
  Eigen::NumericalDiff<LmFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LmFunctor, Eigen::Central>> lm(numdiff);
  lm.setMaxfev(static_cast<Eigen::Index>(max_evaluations));
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  Eigen::VectorXd q = q0;
  const auto status = lm.minimize(q);
  const bool lm_ok = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                     status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                     q.allFinite();
  if (lm_ok) {
    best.q = q;
    best.chi2 = problem.sum_squares(q);
  }
  if (!lm_ok || !std::isfinite(best.chi2)) {
    const Objective objective = [&](const Eigen::VectorXd& v) {
      return problem.sum_squares(v);
    };
    NelderMeadOptions nm;
    nm.initial_step = 0.1;
    nm.max_evaluations = 10 * max_evaluations;
    nm.x_tol = 1e-12;
    nm.f_tol = 1e-24;
    auto result = nelder_mead(objective, q0, nm);
    result = nelder_mead(objective, result.x, nm);
    if (result.value < best.chi2) {
      best.q = result.x;
      best.chi2 = result.value;
      best.fallback = true;
    }
  }
  if (!std::isfinite(best.chi2)) {
    throw FitDiverged("no finite least-squares solution for " +
                      to_string(problem.def->model));
  }
  return best;
}

Eigen::MatrixXd jacobian(const Problem& problem, const Eigen::VectorXd& q) {
  const auto n = static_cast<Eigen::Index>(problem.x.size());
  Eigen::MatrixXd j(n, q.size());
  Eigen::VectorXd plus(n), minus(n);
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(q[k]));
    Eigen::VectorXd qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    problem.residuals(qp, plus);
    problem.residuals(qm, minus);
    j.col(k) = (plus - minus) / (2.0 * h);
  }
  return j;
}

Scaling choose_scaling(const Curve1D& data, const ModelDef& def) {
  Scaling s;
  const double lo = data.x.front();
  const double hi = data.x.back();
  if (def.shift_x) {
    s.x_shift = 0.5 * (lo + hi);
    s.x_scale = 0.5 * (hi - lo);
  } else {
    s.x_scale = std::max(std::abs(lo), std::abs(hi));
  }
  if (!(s.x_scale > 0.0)) s.x_scale = 1.0;
  if (def.scale_y) {
    double m = 0.0;
    for (double v : data.y) m = std::max(m, std::abs(v));
    s.y_scale = m > 0.0 ? m : 1.0;
  }
  return s;
}

Problem make_problem(const Curve1D& data, const ModelDef& def,
                     const CurveFitOptions& options) {
  Problem p;
  p.def = &def;
  p.scaling = choose_scaling(data, def);
  p.x = data.x;
  const bool weighted = options.use_weights && data.y_err.has_value();
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    p.y.push_back(data.y[i] / p.scaling.y_scale);
    p.w.push_back(weighted ? p.scaling.y_scale / (*data.y_err)[i] : 1.0);
  }
  return p;
}

LineFitResult finish(const Curve1D& data, const Problem& problem,
                     const Solution& sol, const CurveFitOptions& options) {
  const ModelDef& def = *problem.def;
  const auto n_params = sol.q.size();
  LineFitResult out;
  out.model = def.model;
  out.names = def.names;
  const Eigen::VectorXd p = problem.physical(sol.q);
  for (Eigen::Index i = 0; i < n_params; ++i) out.params[def.names[i]] = p[i];
  if (sol.fallback) out.flags.push_back(kFlagSimplexFallback);

  out.chi_squared = sol.chi2;
  out.dof = data.x.size() > static_cast<std::size_t>(n_params)
                ? data.x.size() - static_cast<std::size_t>(n_params)
                : 0;
  const Eigen::MatrixXd j = jacobian(problem, sol.q);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  lu.setThreshold(1e-12);
  out.covariance = Eigen::MatrixXd::Constant(n_params, n_params, kInf);
  if (lu.isInvertible() && out.dof > 0) {
    const double s2 = sol.chi2 / static_cast<double>(out.dof);
    Eigen::MatrixXd cov_q = lu.inverse() * s2;
    Eigen::VectorXd t(n_params);
    for (Eigen::Index i = 0; i < n_params; ++i) t[i] = problem.scaling.factor(def.kinds[i]);
    out.covariance = t.asDiagonal() * cov_q * t.asDiagonal();
  } else {
    out.flags.push_back(kFlagSingularCovariance);
  }
  for (Eigen::Index i = 0; i < n_params; ++i) {
    const double var = out.covariance(i, i);
    out.param_errors[def.names[i]] = var >= 0.0 ? std::sqrt(var) : kInf;
  }

  std::vector<double> model(data.x.size());
  for (std::size_t i = 0; i < data.x.size(); ++i) model[i] = def.f(data.x[i], p);
  double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) /
                static_cast<double>(data.y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    ss_res += (data.y[i] - model[i]) * (data.y[i] - model[i]);
    ss_tot += (data.y[i] - mean) * (data.y[i] - mean);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  if (out.r_squared < options.poor_fit_r_squared) out.flags.push_back(kFlagPoorFit);
  return out;
}

LineFitResult run_fit(const Curve1D& data, const ModelDef& def,
                      const Eigen::VectorXd& p0, const CurveFitOptions& options) {
  const Problem problem = make_problem(data, def, options);
  const Solution sol = solve(problem, problem.normalized(p0), options.max_evaluations);
  return finish(data, problem, sol, options);
}

void require_points(const Curve1D& data, std::size_t n, const char* what) {
  data.validate();
  if (data.x.size() < n) {
    std::ostringstream msg;
    msg << what << " needs at least " << n << " points, got " << data.x.size();
    throw InsufficientPoints(msg.str());
  }
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}
std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

/// Width of the region around `peak` where |y - base| stays above half of
/// |y[peak] - base|, with linear interpolation at the crossings.
double half_width_guess(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t peak, double base) {
  const double half = 0.5 * (y[peak] + base);
  const bool up = y[peak] > base;
  auto above = [&](std::size_t i) { return up ? y[i] > half : y[i] < half; };
  auto cross = [&](std::size_t inside, std::size_t outside) {
    const double t = (half - y[inside]) / (y[outside] - y[inside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  double left = x.front(), right = x.back();
  for (std::size_t i = peak; i > 0; --i) {
    if (!above(i - 1)) {
      left = cross(i, i - 1);
      break;
    }
  }
  for (std::size_t i = peak; i + 1 < x.size(); ++i) {
    if (!above(i + 1)) {
      right = cross(i, i + 1);
      break;
    }
  }
  const double w = right - left;
  return w > 0.0 ? w : 0.1 * (x.back() - x.front());
}

double edge_mean(const std::vector<double>& y, std::size_t count) {
  count = std::max<std::size_t>(1, std::min(count, y.size() / 2));
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += y[i] + y[y.size() - 1 - i];
  return s / (2.0 * static_cast<double>(count));
}

const ModelDef& lorentzian_def() {
  static const ModelDef def{
      LineModel::Lorentzian,
      {"amplitude", "fwhm", "center", "background"},
      {Kind::Amplitude, Kind::Width, Kind::Center, Kind::Amplitude},
      [](double x, const Eigen::VectorXd& p) { return lorentzian(x, p[0], p[1], p[2], p[3]); }};
  return def;
}

const ModelDef& double_lorentzian_def() {
  static const ModelDef def{
      LineModel::DoubleLorentzian,
      {"amplitude_1", "fwhm_1", "center_1", "amplitude_2", "fwhm_2", "center_2",
       "background"},
      {Kind::Amplitude, Kind::Width, Kind::Center, Kind::Amplitude, Kind::Width,
       Kind::Center, Kind::Amplitude},
      [](double x, const Eigen::VectorXd& p) {
        return lorentzian(x, p[0], p[1], p[2], 0.0) + lorentzian(x, p[3], p[4], p[5], p[6]);
      }};
  return def;
}

const ModelDef& gaussian_def() {
  static const ModelDef def{
      LineModel::InvertedGaussian,
      {"depth", "sigma", "center", "background"},
      {Kind::Amplitude, Kind::Width, Kind::Center, Kind::Amplitude},
      [](double x, const Eigen::VectorXd& p) {
        return inverted_gaussian(x, p[0], p[1], p[2], p[3]);
      }};
  return def;
}

const ModelDef& exponential_def() {
  static const ModelDef def{
      LineModel::Exponential,
      {"amplitude", "tau", "background"},
      {Kind::Amplitude, Kind::Width, Kind::Amplitude},
      [](double t, const Eigen::VectorXd& p) { return exponential_decay(t, p[0], p[1], p[2]); },
      false};
  return def;
}

ModelDef saturation_def(double background) {
  return {LineModel::Saturation,
          {"f_sat", "p_sat"},
          {Kind::Amplitude, Kind::Width},
          [background](double x, const Eigen::VectorXd& p) {
            return saturation_curve(x, p[0], p[1], background);
          },
          false};
}

const ModelDef& g2_def() {
  static const ModelDef def{
      LineModel::G2,
      {"p", "c", "tau_a", "tau_b", "offset"},
      {Kind::Dimensionless, Kind::Dimensionless, Kind::Width, Kind::Width, Kind::Center},
      [](double x, const Eigen::VectorXd& p) { return g2_model(x, p[0], p[1], p[2], p[3], p[4]); },
      true,
      false};
  return def;
}

void add_derived(LineFitResult& r, const std::string& name, double value, double error) {
  r.derived[name] = value;
  r.derived_errors[name] = error;
}

std::size_t index_of(const LineFitResult& r, const std::string& name) {
  return static_cast<std::size_t>(
      std::find(r.names.begin(), r.names.end(), name) - r.names.begin());
}

/// Local maxima ranked by topographic prominence, highest first.
std::vector<std::size_t> prominent_peaks(const std::vector<double>& y) {
  std::vector<std::pair<double, std::size_t>> ranked;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    double left_min = y[i];
    for (std::size_t k = i; k > 0; --k) {
      if (y[k - 1] > y[i]) break;
      left_min = std::min(left_min, y[k - 1]);
    }
    double right_min = y[i];
    for (std::size_t k = i + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      right_min = std::min(right_min, y[k]);
    }
    ranked.emplace_back(y[i] - std::max(left_min, right_min), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (const auto& [prominence, i] : ranked) out.push_back(i);
  return out;
}

}  // namespace

void Curve1D::validate() const {
  if (x.size() != y.size()) throw BadInput("x and y differ in length");
  if (y_err && y_err->size() != y.size()) throw BadInput("y_err and y differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw BadInput("curve contains non-finite values");
    }
    if (i > 0 && !(x[i] > x[i - 1])) throw BadInput("x must be strictly increasing");
    if (y_err && !((*y_err)[i] > 0.0 && std::isfinite((*y_err)[i]))) {
      throw BadInput("y_err must be positive and finite");
    }
  }
}

std::string to_string(LineModel model) {
  switch (model) {
    case LineModel::Lorentzian: return "lorentzian";
    case LineModel::DoubleLorentzian: return "double_lorentzian";
    case LineModel::InvertedGaussian: return "gaussian";
    case LineModel::Exponential: return "exponential";
    case LineModel::Saturation: return "saturation";
    case LineModel::G2: return "g2";
    case LineModel::Linear: return "linear";
    case LineModel::Cubic: return "cubic";
    case LineModel::CubicAnchored: return "cubic_anchored";
  }
  return "unknown";
}

double LineFitResult::param(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) throw BadInput("no fitted parameter named '" + name + "'");
  return it->second;
}

double LineFitResult::error(const std::string& name) const {
  const auto it = param_errors.find(name);
  if (it == param_errors.end()) throw BadInput("no fitted parameter named '" + name + "'");
  return it->second;
}

bool LineFitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::vector<double> LineFitResult::evaluate(const std::vector<double>& x) const {
  std::vector<double> out;
  out.reserve(x.size());
  auto p = [&](const char* name) { return param(name); };
  for (double v : x) {
    switch (model) {
      case LineModel::Lorentzian:
        out.push_back(lorentzian(v, p("amplitude"), p("fwhm"), p("center"), p("background")));
        break;
      case LineModel::DoubleLorentzian:
        out.push_back(lorentzian(v, p("amplitude_1"), p("fwhm_1"), p("center_1"), 0.0) +
                      lorentzian(v, p("amplitude_2"), p("fwhm_2"), p("center_2"),
                                 p("background")));
        break;
      case LineModel::InvertedGaussian:
        out.push_back(
            inverted_gaussian(v, p("depth"), p("sigma"), p("center"), p("background")));
        break;
      case LineModel::Exponential:
        out.push_back(exponential_decay(v, p("amplitude"), p("tau"), p("background")));
        break;
      case LineModel::Saturation:
        out.push_back(saturation_curve(v, p("f_sat"), p("p_sat"), constants.at("background")));
        break;
      case LineModel::G2:
        out.push_back(g2_model(v, p("p"), p("c"), p("tau_a"), p("tau_b"), p("offset")));
        break;
      case LineModel::Linear:
        out.push_back(p("a") * v + p("b"));
        break;
      case LineModel::Cubic:
        out.push_back(p("a") * v * v * v + p("b"));
        break;
      case LineModel::CubicAnchored:
        out.push_back(p("a") * v * v * v + constants.at("y0"));
        break;
    }
  }
  return out;
}

double lorentzian(double x, double amplitude, double fwhm, double center,
                  double background) {
  const double hw2 = 0.25 * fwhm * fwhm;
  const double dx = x - center;
  return amplitude * hw2 / (dx * dx + hw2) + background;
}

double inverted_gaussian(double x, double depth, double sigma, double center,
                         double background) {
  const double z = (x - center) / sigma;
  return background - depth * std::exp(-0.5 * z * z);
}

double exponential_decay(double t, double amplitude, double tau, double background) {
  return amplitude * std::exp(-t / tau) + background;
}

double saturation_curve(double power, double f_sat, double p_sat, double background) {
  return f_sat * power / (p_sat + power) + background;
}

double g2_model(double delay, double p, double c, double tau_a, double tau_b,
                double offset) {
  const double d = std::abs(delay - offset);
  return 1.0 + p * p * (c * std::exp(-d / tau_b) - (1.0 + c) * std::exp(-d / tau_a));
}

LineFitResult fit_lorentzian(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 5, "Lorentzian fit");
  const auto& y = data.y;
  const std::size_t peak = argmax(y);
  const double bg = edge_mean(y, y.size() / 10);
  Eigen::VectorXd p0(4);
  p0 << y[peak] - bg, half_width_guess(data.x, y, peak, bg), data.x[peak], bg;
  if (!(p0[0] > 0.0)) {
    // no peak above the edges; start from the global maximum
    p0[3] = *std::min_element(y.begin(), y.end());
    p0[0] = y[peak] - p0[3];
  }
  auto r = run_fit(data, lorentzian_def(), p0, options);
  r.params["fwhm"] = std::abs(r.params["fwhm"]);
  if (!(r.params["fwhm"] > 0.0) || !std::isfinite(r.params["fwhm"])) {
    throw FitDiverged("Lorentzian width collapsed");
  }
  r.fwhm = r.params["fwhm"];
  add_derived(r, "fwhm", *r.fwhm, r.param_errors["fwhm"]);
  return r;
}

LineFitResult fit_double_lorentzian(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 9, "double Lorentzian fit");
  const auto& x = data.x;
  const auto& y = data.y;
  const double bg = edge_mean(y, y.size() / 10);
  const auto peaks = prominent_peaks(y);
  const double span = x.back() - x.front();

  Eigen::VectorXd p0(7);
  if (peaks.size() >= 2) {
    const std::size_t a = std::min(peaks[0], peaks[1]);
    const std::size_t b = std::max(peaks[0], peaks[1]);
    const double sep = x[b] - x[a];
    p0 << y[a] - bg, std::min(half_width_guess(x, y, a, bg), sep), x[a], y[b] - bg,
        std::min(half_width_guess(x, y, b, bg), sep), x[b], bg;
  } else {
    const std::size_t a = peaks.empty() ? argmax(y) : peaks[0];
    const double w = half_width_guess(x, y, a, bg);
    p0 << 0.5 * (y[a] - bg), w, x[a] - 0.25 * w, 0.5 * (y[a] - bg), w, x[a] + 0.25 * w, bg;
  }
  if (!(span > 0.0)) throw BadInput("degenerate x range");

  auto r = run_fit(data, double_lorentzian_def(), p0, options);
  for (const char* w : {"fwhm_1", "fwhm_2"}) r.params[w] = std::abs(r.params[w]);

  // order components by center
  if (r.params["center_1"] > r.params["center_2"]) {
    const std::vector<std::string> a{"amplitude_1", "fwhm_1", "center_1"};
    const std::vector<std::string> b{"amplitude_2", "fwhm_2", "center_2"};
    std::vector<Eigen::Index> perm{3, 4, 5, 0, 1, 2, 6};
    for (std::size_t k = 0; k < 3; ++k) {
      std::swap(r.params[a[k]], r.params[b[k]]);
      std::swap(r.param_errors[a[k]], r.param_errors[b[k]]);
    }
    Eigen::MatrixXd cov(7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) cov(i, j) = r.covariance(perm[i], perm[j]);
    r.covariance = cov;
  }

  const double w1 = r.params["fwhm_1"];
  const double w2 = r.params["fwhm_2"];
  const double mean_w = 0.5 * (w1 + w2);
  if (std::abs(r.params["center_2"] - r.params["center_1"]) < 0.01 * mean_w) {
    std::ostringstream msg;
    msg << "component centers " << r.params["center_1"] << " and "
        << r.params["center_2"] << " lie within 1% of the mean width " << mean_w;
    if (options.strict_degenerate) throw DegenerateComponents(msg.str());
    auto single = fit_lorentzian(data, options);
    single.flags.push_back(kFlagDegenerateComponents);
    return single;
  }

  const double a1 = std::abs(r.params["amplitude_1"]);
  const double a2 = std::abs(r.params["amplitude_2"]);
  const double a_max = std::max(a1, a2);
  for (const auto& [amp, name] : {std::pair{a1, "amplitude_1"}, std::pair{a2, "amplitude_2"}}) {
    if (amp < 1e-3 * a_max || !(r.param_errors[name] < amp)) {
      r.flags.push_back(kFlagUnconstrainedComponent);
      break;
    }
  }

  const auto i1 = static_cast<Eigen::Index>(index_of(r, "fwhm_1"));
  const auto i2 = static_cast<Eigen::Index>(index_of(r, "fwhm_2"));
  const double var_mean =
      0.25 * (r.covariance(i1, i1) + r.covariance(i2, i2) + 2.0 * r.covariance(i1, i2));
  r.fwhm = mean_w;
  add_derived(r, "fwhm_1", w1, r.param_errors["fwhm_1"]);
  add_derived(r, "fwhm_2", w2, r.param_errors["fwhm_2"]);
  add_derived(r, "fwhm_mean", mean_w, var_mean >= 0.0 ? std::sqrt(var_mean) : kInf);
  return r;
}

LineFitResult fit_inverted_gaussian(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 5, "Gaussian prefit");
  const auto& x = data.x;
  const auto& y = data.y;
  const std::size_t low = argmin(y);
  if (low == 0 || low + 1 == y.size() || !(y[low] < std::min(y.front(), y.back()))) {
    throw FitDiverged("data has no interior dip");
  }
  const double bg = edge_mean(y, y.size() / 10);
  Eigen::VectorXd p0(4);
  p0 << bg - y[low], half_width_guess(x, y, low, bg) / kFwhmPerSigma, x[low], bg;
  auto r = run_fit(data, gaussian_def(), p0, options);
  r.params["sigma"] = std::abs(r.params["sigma"]);
  const double center = r.params["center"];
  if (!(r.params["depth"] > 0.0) || !(center >= x.front() && center <= x.back())) {
    throw FitDiverged("Gaussian prefit did not settle on a dip inside the data");
  }
  r.fwhm = kFwhmPerSigma * r.params["sigma"];
  add_derived(r, "fwhm", *r.fwhm, kFwhmPerSigma * r.param_errors["sigma"]);
  return r;
}

double fit_gaussian_prefit(const Curve1D& data, const CurveFitOptions& options) {
  return fit_inverted_gaussian(data, options).params.at("center");
}

LineFitResult fit_exponential_lifetime(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 4, "exponential fit");
  const auto& x = data.x;
  const auto& y = data.y;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (!(*hi - *lo > 1e-12 * std::max(std::abs(*hi), std::abs(*lo)))) {
    throw FitDiverged("constant data has no decay time");
  }
  const std::size_t tail = std::max<std::size_t>(1, y.size() / 10);
  double bg = 0.0;
  for (std::size_t i = y.size() - tail; i < y.size(); ++i) bg += y[i];
  bg /= static_cast<double>(tail);
  const double a_start = y.front() - bg;
  double tau = 0.3 * (x.back() - x.front());
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (std::abs(y[i] - bg) < std::abs(a_start) / std::exp(1.0)) {
      tau = std::max(x[i] - x.front(), 1e-3 * (x.back() - x.front()));
      break;
    }
  }
  Eigen::VectorXd p0(3);
  p0 << a_start * std::exp(x.front() / tau), tau, bg;
  auto r = run_fit(data, exponential_def(), p0, options);
  const double fitted_tau = r.params["tau"];
  if (!(fitted_tau > 0.0) || !std::isfinite(fitted_tau) ||
      fitted_tau > 1e3 * (x.back() - x.front())) {
    std::ostringstream msg;
    msg << "decay time " << fitted_tau << " is not supported by the data";
    throw FitDiverged(msg.str());
  }
  add_derived(r, "tau", fitted_tau, r.param_errors["tau"]);
  add_derived(r, "homogeneous_linewidth", 1.0 / (2.0 * std::numbers::pi * fitted_tau),
              r.param_errors["tau"] / (2.0 * std::numbers::pi * fitted_tau * fitted_tau));
  return r;
}

LineFitResult fit_saturation(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 3, "saturation fit");
  const auto& x = data.x;
  const auto& y = data.y;
  if (x.front() < 0.0) throw BadInput("powers must be >= 0");
  const double bg = options.saturation_background;
  const double top = *std::max_element(y.begin(), y.end()) - bg;
  double p_sat = x[x.size() / 2];
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] - bg >= 0.5 * top) {
      p_sat = std::max(x[i], 1e-3 * x.back());
      break;
    }
  }
  Eigen::VectorXd p0(2);
  p0 << 1.5 * top, p_sat;
  const ModelDef def = saturation_def(bg);
  auto r = run_fit(data, def, p0, options);
  r.constants["background"] = bg;
  if (!(r.params["f_sat"] > 0.0) || !(r.params["p_sat"] > 0.0)) {
    throw FitDiverged("saturation parameters must come out positive");
  }
  return r;
}

LineFitResult fit_g2(const Curve1D& data, const CurveFitOptions& options) {
  require_points(data, 6, "g2 fit");
  const auto& x = data.x;
  const auto& y = data.y;
  const std::size_t low = argmin(y);
  const double p2 = std::clamp(1.0 - y[low], 0.05, 1.0);
  const double peak = *std::max_element(y.begin(), y.end());
  const double c = peak > 1.0 ? std::max(0.05, (peak - 1.0) / p2) : 0.1;
  const double tau_a = std::max(0.25 * half_width_guess(x, y, low, 1.0),
                                1e-3 * (x.back() - x.front()));
  Eigen::VectorXd p0(5);
  p0 << std::sqrt(p2), c, tau_a, 20.0 * tau_a, x[low];
  auto r = run_fit(data, g2_def(), p0, options);
  r.params["p"] = std::abs(r.params["p"]);
  const double p = r.params["p"];
  if (!(r.params["tau_a"] > 0.0) || !(r.params["tau_b"] > 0.0)) {
    throw FitDiverged("g2 time constants must come out positive");
  }
  add_derived(r, "g2_zero", 1.0 - p * p, 2.0 * p * r.param_errors["p"]);
  return r;
}

LineFitResult fit_line(LineModel model, const Curve1D& data, const CurveFitOptions& options) {
  switch (model) {
    case LineModel::Lorentzian: return fit_lorentzian(data, options);
    case LineModel::DoubleLorentzian: return fit_double_lorentzian(data, options);
    case LineModel::InvertedGaussian: return fit_inverted_gaussian(data, options);
    case LineModel::Exponential: return fit_exponential_lifetime(data, options);
    case LineModel::Saturation: return fit_saturation(data, options);
    case LineModel::G2: return fit_g2(data, options);
    default: break;
  }
  throw BadInput("fit_line does not handle " + to_string(model) +
                 "; polynomial models live in model_select");
}

double r_squared(const std::vector<double>& y, const std::vector<double>& model) {
  if (y.size() != model.size()) throw BadInput("data and model differ in length");
  if (y.empty()) throw BadInput("R^2 of an empty series");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - model[i]) * (y[i] - model[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw ZeroVariance("all observations are equal");
  return 1.0 - ss_res / ss_tot;
}

double r_squared(const Curve1D& data, const std::vector<double>& model) {
  return r_squared(data.y, model);
}

}  // namespace cptkit
