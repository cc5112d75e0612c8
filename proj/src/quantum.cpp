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

#include "cptkit/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "cptkit/dopri5.hpp"
#include "cptkit/error.hpp"
#include "cptkit/thermalization.hpp"

namespace cptkit {

namespace {

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

Matrix3c apply_generator(const Matrix3c& rho, const Matrix3c& h,
                         std::span<const JumpOperator> jumps) {
  const Complex i_unit(0.0, 1.0);
  Matrix3c out = -i_unit * (h * rho - rho * h);
  for (const auto& jump : jumps) {
    if (jump.rate == 0.0) continue;
    const Matrix3c s = jump.matrix();
    const Matrix3c s_dag = s.adjoint();
    const Matrix3c n = s_dag * s;
    out += s * rho * s_dag - 0.5 * (n * rho + rho * n);
  }
  return out;
}

Matrix3c unvectorize(const StateVector& v) {
  Matrix3c m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
  return m;
}

double steady_scale(const Hamiltonian& h, std::span<const JumpOperator> jumps) {
  double scale = 0.0;
  for (const auto& jump : jumps) scale = std::max(scale, jump.rate);
  if (scale == 0.0) scale = h.elements().cwiseAbs().maxCoeff();
  return scale;
}

struct EvolutionOutcome {
  DensityMatrix rho;
  std::size_t steps = 0;
};

EvolutionOutcome evolve_impl(const DensityMatrix& initial, const Hamiltonian& h,
                             std::span<const JumpOperator> jumps, double t,
                             const EvolveOptions& options,
                             const EvolutionObserver& observer) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw BadInput("evolution time must be positive, got " + std::to_string(t));
  }
  const Superoperator liouvillian = build_liouvillian(h, jumps);
  const Complex trace0 = initial.trace();

  StateVector y = initial.to_vector();
  Dopri5Options ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;
  ode.max_steps = options.max_steps;

  auto rhs = [&](double, const StateVector& state, StateVector& dydt) {
    dydt.noalias() = liouvillian * state;
  };
  auto watch = [&](double time, const StateVector& state) {
    const Complex tr = state[0] + state[4] + state[8];
    if (std::abs(tr - trace0) > options.trace_tol) {
      std::ostringstream msg;
      msg << "trace drifted to " << tr.real() << " at t=" << time;
      throw NumericalInstability(msg.str());
    }
    if (observer) observer(time, DensityMatrix::from_vector(state));
    return true;
  };
  const auto stats = integrate_dopri5(rhs, y, 0.0, t, ode, watch);
  return {DensityMatrix::from_vector(y), stats.accepted};
}

}  // namespace

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix() : elements_(Matrix3c::Zero()) {
  elements_(kGround1, kGround1) = 1.0;
}

DensityMatrix::DensityMatrix(const Matrix3c& elements) : elements_(elements) {}

DensityMatrix DensityMatrix::pure(int level) {
  if (level < 0 || level > 2) throw BadInput("level index out of range");
  Matrix3c m = Matrix3c::Zero();
  m(level, level) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::from_vector(const StateVector& v) {
  return DensityMatrix(unvectorize(v));
}

StateVector DensityMatrix::to_vector() const {
  StateVector v;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[3 * r + c] = elements_(r, c);
  return v;
}

double DensityMatrix::hermiticity_error() const {
  return (elements_ - elements_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const Matrix3c herm = 0.5 * (elements_ + elements_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix3c> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Parameters

void DriveConfig::validate() const {
  if (!finite_nonnegative(omega_c) || !finite_nonnegative(omega_d)) {
    throw BadInput("Rabi frequencies must be finite and >= 0");
  }
  if (!std::isfinite(delta_c) || !std::isfinite(delta_d)) {
    throw BadInput("detunings must be finite");
  }
}

SystemRates SystemRates::thermalized(double gamma_c, double gamma_d_opt,
                                     double gamma_minus, double gamma_deph,
                                     double delta_12, double temperature,
                                     const PhysicalConstants& constants) {
  SystemRates r;
  r.gamma_c = gamma_c;
  r.gamma_d_opt = gamma_d_opt;
  r.gamma_minus = gamma_minus;
  r.gamma_plus =
      boltzmann_gamma_plus(gamma_minus, delta_12, temperature, constants);
  r.gamma_deph = gamma_deph;
  r.delta_12 = delta_12;
  r.temperature = temperature;
  r.validate();
  return r;
}

void SystemRates::validate() const {
  for (double rate : {gamma_c, gamma_d_opt, gamma_plus, gamma_minus, gamma_deph}) {
    if (!finite_nonnegative(rate)) throw BadInput("rates must be finite and >= 0");
  }
  if (!(delta_12 > 0.0) || !(temperature > 0.0)) {
    throw BadInput("delta_12 and temperature must be positive");
  }
}

double SystemRates::max_rate() const {
  return std::max({gamma_c, gamma_d_opt, gamma_plus, gamma_minus, gamma_deph});
}

Matrix3c JumpOperator::matrix() const {
  Matrix3c m = Matrix3c::Zero();
  m(target, source) = std::sqrt(rate);
  return m;
}

// ---------------------------------------------------------------------------
// Operators

Hamiltonian build_hamiltonian(const DriveConfig& drive) {
  drive.validate();
  Matrix3c h = Matrix3c::Zero();
  h(kGround1, kExcited) = h(kExcited, kGround1) = 0.5 * drive.omega_c;
  h(kGround2, kExcited) = h(kExcited, kGround2) = 0.5 * drive.omega_d;
  h(kGround2, kGround2) = drive.delta_c - drive.delta_d;
  h(kExcited, kExcited) = drive.delta_c;
  return Hamiltonian(h);
}

std::vector<JumpOperator> build_jump_operators(const SystemRates& rates) {
  rates.validate();
  return {
      {kGround1, kGround2, rates.gamma_plus},
      {kGround2, kGround1, rates.gamma_minus},
      {kExcited, kGround1, rates.gamma_c},
      {kExcited, kGround2, rates.gamma_d_opt},
      {kGround2, kGround2, rates.gamma_deph},
  };
}

Matrix3c lindblad_rhs(const DensityMatrix& rho, const Hamiltonian& h,
                      std::span<const JumpOperator> jumps) {
  return apply_generator(rho.elements(), h.elements(), jumps);
}

Superoperator build_liouvillian(const Hamiltonian& h,
                                std::span<const JumpOperator> jumps) {
  Superoperator l;
  for (int k = 0; k < 9; ++k) {
    Matrix3c basis = Matrix3c::Zero();
    basis(k / 3, k % 3) = 1.0;
    const Matrix3c column = apply_generator(basis, h.elements(), jumps);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) l(3 * r + c, k) = column(r, c);
  }
  return l;
}

// ---------------------------------------------------------------------------
// Evolution

DensityMatrix evolve(const DensityMatrix& initial, const Hamiltonian& h,
                     std::span<const JumpOperator> jumps, double t,
                     const EvolveOptions& options,
                     const EvolutionObserver& observer) {
  return evolve_impl(initial, h, jumps, t, options, observer).rho;
}

SteadyState evolve_to_steady_state(const DensityMatrix& initial,
                                   const Hamiltonian& h,
                                   std::span<const JumpOperator> jumps,
                                   double t_final,
                                   const EvolveOptions& options) {
  auto outcome = evolve_impl(initial, h, jumps, t_final, options, {});
  SteadyState result{outcome.rho, 0.0, 0.0, outcome.steps};
  result.residual =
      lindblad_rhs(result.rho, h, jumps).cwiseAbs().maxCoeff();
  result.tolerance = options.steady_tol_factor * steady_scale(h, jumps);
  if (result.residual > result.tolerance) {
    std::ostringstream msg;
    msg << "max |d rho/dt| = " << result.residual << " exceeds "
        << result.tolerance << " at t=" << t_final;
    throw NonConvergence(msg.str());
  }
  return result;
}

DensityMatrix solve_steady_state(const Hamiltonian& h,
                                 std::span<const JumpOperator> jumps) {
  Superoperator a = build_liouvillian(h, jumps);
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw SingularLiouvillian("Liouvillian is identically zero");
  a /= scale;
  // The population rows sum to d(trace)/dt = 0, so one of them is redundant.
  a.row(0).setZero();
  a(0, 0) = a(0, 4) = a(0, 8) = 1.0;
  StateVector b = StateVector::Zero();
  b[0] = 1.0;

  Eigen::FullPivLU<Superoperator> lu(a);
  lu.setThreshold(1e-11);
  if (!lu.isInvertible()) {
    throw SingularLiouvillian("stationary state is not unique (rank " +
                              std::to_string(lu.rank()) + " of 9)");
  }
  const Matrix3c rho = unvectorize(lu.solve(b));
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

DensityMatrix steady_state(const Hamiltonian& h,
                           std::span<const JumpOperator> jumps,
                           const SteadyStateOptions& options) {
  if (options.method == SteadyStateMethod::Direct) {
    try {
      return solve_steady_state(h, jumps);
    } catch (const SingularLiouvillian&) {
      // fall through to time integration from |1><1|
    }
  }
  return evolve_to_steady_state(DensityMatrix(), h, jumps, options.t_final,
                                options.evolve)
      .rho;
}

}  // namespace cptkit
