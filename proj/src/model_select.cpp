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


#include "cptkit/model_select.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "cptkit/error.hpp"

namespace cptkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double basis(ThermalModelKind kind, double t) {
  return kind == ThermalModelKind::Linear ? t : t * t * t;
}

// Solves min |X beta - y|^2 and fills parameters, covariance and R^2.
LineFitResult ols(const ThermalSeries& series, ThermalModelKind kind, std::size_t n,
                  std::optional<double> y0) {
  const bool anchored = kind == ThermalModelKind::CubicAnchored;
  const Eigen::Index cols = anchored ? 1 : 2;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = basis(kind, series.temperatures[i]);
    if (!anchored) x(r, 1) = 1.0;
    y[r] = series.linewidths[i] - (anchored ? *y0 : 0.0);
  }
  // column scaling keeps T^3 columns well conditioned
  Eigen::VectorXd scale = x.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < cols; ++c)
    if (scale[c] == 0.0) scale[c] = 1.0;
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  if (qr.rank() < cols) {
    throw InsufficientPoints("fit points do not determine the model parameters");
  }
  const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);

  LineFitResult out;
  switch (kind) {
    case ThermalModelKind::Linear: out.model = LineModel::Linear; break;
    case ThermalModelKind::Cubic: out.model = LineModel::Cubic; break;
    case ThermalModelKind::CubicAnchored: out.model = LineModel::CubicAnchored; break;
  }
  out.names = anchored ? std::vector<std::string>{"a"} : std::vector<std::string>{"a", "b"};
  for (Eigen::Index c = 0; c < cols; ++c) out.params[out.names[c]] = beta[c];
  if (anchored) out.constants["y0"] = *y0;

  const Eigen::VectorXd resid = y - x * beta;
  out.chi_squared = resid.squaredNorm();
  out.dof = n - static_cast<std::size_t>(cols);
  out.covariance = Eigen::MatrixXd::Constant(cols, cols, kInf);
  if (out.dof > 0) {
    const Eigen::MatrixXd xtx_inv = (xs.transpose() * xs).inverse();
    out.covariance = scale.cwiseInverse().asDiagonal() * xtx_inv *
                     scale.cwiseInverse().asDiagonal() *
                     (out.chi_squared / static_cast<double>(out.dof));
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    out.param_errors[out.names[c]] = std::sqrt(out.covariance(c, c));
  }

  const std::vector<double> ys(series.linewidths.begin(),
                               series.linewidths.begin() + static_cast<long>(n));
  const std::vector<double> xs_t(series.temperatures.begin(),
                                 series.temperatures.begin() + static_cast<long>(n));
  out.r_squared = r_squared(ys, out.evaluate(xs_t));
  return out;
}

IncrementalR2 scan(const ThermalSeries& series, const ModelFamily& family,
                   bool out_of_sample) {
  series.validate();
  if (series.size() < 3) {
    throw InsufficientPoints("incremental R^2 needs at least 3 points");
  }
  IncrementalR2 out;
  for (std::size_t n = 3; n <= series.size(); ++n) {
    const auto fit = fit_thermal_model(series, family, n);
    out.n_points.push_back(n);
    out.r2.push_back(out_of_sample ? r_squared(series.linewidths,
                                               fit.evaluate(series.temperatures))
                                   : fit.r_squared);
  }
  return out;
}

}  // namespace

void ThermalSeries::validate() const {
  if (linewidths.size() != temperatures.size()) {
    throw BadInput("temperatures and linewidths differ in length");
  }
  if (!linewidth_errors.empty() && linewidth_errors.size() != temperatures.size()) {
    throw BadInput("linewidth errors must be empty or match the series");
  }
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    if (!std::isfinite(temperatures[i]) || !(temperatures[i] > 0.0)) {
      throw BadInput("temperatures must be positive");
    }
    if (i > 0 && !(temperatures[i] > temperatures[i - 1])) {
      throw BadInput("temperatures must be strictly ascending");
    }
    if (!std::isfinite(linewidths[i]) || !(linewidths[i] > 0.0)) {
      throw BadInput("linewidths must be positive");
    }
    if (!linewidth_errors.empty() &&
        (!std::isfinite(linewidth_errors[i]) || !(linewidth_errors[i] > 0.0))) {
      throw BadInput("linewidth errors must be positive");
    }
  }
}

const char* to_string(ThermalModelKind kind) {
  switch (kind) {
    case ThermalModelKind::Linear: return "linear";
    case ThermalModelKind::Cubic: return "cubic";
    case ThermalModelKind::CubicAnchored: return "cubic_anchored";
  }
  return "unknown";
}

LineFitResult fit_thermal_model(const ThermalSeries& series, const ModelFamily& family,
                                std::size_t n_points) {
  series.validate();
  if (n_points < 2) {
    throw InsufficientPoints("thermal model fits need at least 2 points");
  }
  if (n_points > series.size()) {
    std::ostringstream msg;
    msg << "requested " << n_points << " points from a series of " << series.size();
    throw InsufficientPoints(msg.str());
  }
  std::optional<double> y0 = family.y0;
  if (family.kind == ThermalModelKind::CubicAnchored && !y0) {
    y0 = ols(series, ThermalModelKind::Linear, n_points, std::nullopt).param("b");
  }
  return ols(series, family.kind, n_points, y0);
}

IncrementalR2 incremental_r2(const ThermalSeries& series, const ModelFamily& family) {
  return scan(series, family, false);
}

IncrementalR2 incremental_r2_out_of_sample(const ThermalSeries& series,
                                           const ModelFamily& family) {
  return scan(series, family, true);
}

std::optional<Cutoff> detect_cutoff(const IncrementalR2& sequence,
                                    const std::vector<double>& temperatures) {
  const auto& r2 = sequence.r2;
  if (r2.size() < 3) throw InsufficientPoints("cutoff detection needs 3 R^2 values");
  if (sequence.n_points.size() != r2.size()) {
    throw BadInput("R^2 sequence and point counts differ in length");
  }
  for (std::size_t k = 1; k + 1 < r2.size(); ++k) {
    if (r2[k] > r2[k - 1] && r2[k] >= r2[k + 1]) {
      const std::size_t n = sequence.n_points[k];
      if (n == 0 || n > temperatures.size()) {
        throw BadInput("R^2 point count exceeds the temperature list");
      }
      return Cutoff{k, n, temperatures[n - 1]};
    }
  }
  return std::nullopt;
}

double total_abs_error(const ThermalSeries& series, const LineFitResult& fit,
                       const std::vector<std::size_t>& indices) {
  std::vector<double> x;
  for (std::size_t i : indices) {
    if (i >= series.size()) throw BadInput("index outside the series");
    x.push_back(series.temperatures[i]);
  }
  const auto model = fit.evaluate(x);
  double sum = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    sum += std::abs(series.linewidths[indices[k]] - model[k]);
  }
  return sum;
}

std::vector<std::size_t> first_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace cptkit
