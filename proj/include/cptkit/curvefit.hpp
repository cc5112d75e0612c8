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

// Least-squares fits of spectroscopy line shapes. Every fit runs on data
// rescaled to unit x and y ranges, so results are equivariant under
// rescaling of y (amplitudes scale, widths and centers do not) and under
// shifts of x for the line shapes.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cptkit {

struct Curve1D {
  std::vector<double> x;
  std::vector<double> y;
  std::optional<std::vector<double>> y_err;

  /// Strictly increasing x, equal lengths, finite values, y_err > 0.
  void validate() const;
};

enum class LineModel {
  Lorentzian,
  DoubleLorentzian,
  InvertedGaussian,
  Exponential,
  Saturation,
  G2,
  Linear,         // a x + b
  Cubic,          // a x^3 + b
  CubicAnchored,  // a x^3 + y0, y0 held fixed
};

std::string to_string(LineModel model);

// Flags attached to a LineFitResult.
inline constexpr const char* kFlagSimplexFallback = "simplex_fallback";
inline constexpr const char* kFlagDegenerateComponents = "degenerate_components";
inline constexpr const char* kFlagUnconstrainedComponent = "component_unconstrained";
inline constexpr const char* kFlagSingularCovariance = "singular_covariance";
inline constexpr const char* kFlagPoorFit = "poor_fit";

struct LineFitResult {
  LineModel model = LineModel::Lorentzian;
  /// Fitted parameters in fit order. Fixed constants do not appear here.
  std::vector<std::string> names;
  std::map<std::string, double> params;
  std::map<std::string, double> param_errors;  // 1 sigma
  Eigen::MatrixXd covariance;                  // in `names` order
  /// Derived quantities (FWHMs, g2 at zero delay, ...) with their errors.
  std::map<std::string, double> derived;
  std::map<std::string, double> derived_errors;
  std::optional<double> fwhm;
  double r_squared = 0.0;
  double chi_squared = 0.0;
  std::size_t dof = 0;
  std::vector<std::string> flags;
  /// Fixed inputs the model needs (saturation background, anchored y0).
  std::map<std::string, double> constants;

  double param(const std::string& name) const;
  double error(const std::string& name) const;
  bool has_flag(const std::string& flag) const;
  /// The fitted model at the given abscissae.
  std::vector<double> evaluate(const std::vector<double>& x) const;
};

struct CurveFitOptions {
  /// Use y_err as weights when present.
  bool use_weights = true;
  std::size_t max_evaluations = 4000;
  /// Double Lorentzian: throw DegenerateComponents instead of falling back.
  bool strict_degenerate = false;
  /// Saturation background, in the units of y.
  double saturation_background = 0.5;
  /// Results below this R^2 carry the poor-fit flag.
  double poor_fit_r_squared = 0.1;
};

// Model functions in physical units.
double lorentzian(double x, double amplitude, double fwhm, double center,
                  double background);
double inverted_gaussian(double x, double depth, double sigma, double center,
                         double background);
double exponential_decay(double t, double amplitude, double tau, double background);
double saturation_curve(double power, double f_sat, double p_sat, double background);
double g2_model(double delay, double p, double c, double tau_a, double tau_b,
                double offset);

/// y = A (G/2)^2 / ((x - x0)^2 + (G/2)^2) + bg. Names: amplitude, fwhm,
/// center, background.
LineFitResult fit_lorentzian(const Curve1D& data, const CurveFitOptions& options = {});

/// Two Lorentzians over a shared background. Names: amplitude_1, fwhm_1,
/// center_1, amplitude_2, fwhm_2, center_2, background, ordered by center.
/// `fwhm` holds the mean width. Centers closer than 1% of the mean width
/// fall back to a single Lorentzian with the degenerate flag.
LineFitResult fit_double_lorentzian(const Curve1D& data,
                                    const CurveFitOptions& options = {});

/// Full inverted-Gaussian dip fit. Names: depth, sigma, center, background.
LineFitResult fit_inverted_gaussian(const Curve1D& data,
                                    const CurveFitOptions& options = {});

/// Center of an inverted-Gaussian fit to a dip.
double fit_gaussian_prefit(const Curve1D& data, const CurveFitOptions& options = {});

/// y = A exp(-t / tau) + bg. Names: amplitude, tau, background.
LineFitResult fit_exponential_lifetime(const Curve1D& data,
                                       const CurveFitOptions& options = {});

/// F(P) = F_sat P / (P_sat + P) + bg with bg fixed. Names: f_sat, p_sat.
LineFitResult fit_saturation(const Curve1D& data, const CurveFitOptions& options = {});

/// g2(t) = 1 + p^2 [c exp(-|t-o|/tau_b) - (1+c) exp(-|t-o|/tau_a)].
/// Names: p, c, tau_a, tau_b, offset. Derived g2_zero = 1 - p^2.
LineFitResult fit_g2(const Curve1D& data, const CurveFitOptions& options = {});

LineFitResult fit_line(LineModel model, const Curve1D& data,
                       const CurveFitOptions& options = {});

/// 1 - SS_res / SS_tot with SS_tot about the mean of y.
double r_squared(const std::vector<double>& y, const std::vector<double>& model);
double r_squared(const Curve1D& data, const std::vector<double>& model);

}  // namespace cptkit
