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

// Three-level lambda system: Hamiltonian, Lindblad jump operators, and the
// master-equation integrator.
//
// Basis order is |1> (lower ground), |2> (upper ground), |3> (excited).
// Energies are stored as H / hbar in rad/s, rates in 1/s.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cptkit/units.hpp"

namespace cptkit {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix<Complex, 3, 3>;
/// Row-major vectorization: vec(rho)[3 * r + c] = rho(r, c).
using StateVector = Eigen::Matrix<Complex, 9, 1>;
using Superoperator = Eigen::Matrix<Complex, 9, 9>;

inline constexpr int kGround1 = 0;
inline constexpr int kGround2 = 1;
inline constexpr int kExcited = 2;

class DensityMatrix {
 public:
  /// Starts in |1><1|.
  DensityMatrix();
  explicit DensityMatrix(const Matrix3c& elements);

  static DensityMatrix pure(int level);
  static DensityMatrix from_vector(const StateVector& v);

  const Matrix3c& elements() const { return elements_; }
  StateVector to_vector() const;

  Complex operator()(int row, int col) const { return elements_(row, col); }
  double population(int level) const { return elements_(level, level).real(); }
  Complex trace() const { return elements_.trace(); }
  /// max |rho - rho^dagger|
  double hermiticity_error() const;
  /// Smallest eigenvalue of the Hermitian part.
  double min_eigenvalue() const;

 private:
  Matrix3c elements_;
};

/// Laser drive. Rabi frequencies and detunings in rad/s.
struct DriveConfig {
  double omega_c = 0.0;
  double omega_d = 0.0;
  double delta_c = 0.0;
  double delta_d = 0.0;

  void validate() const;
};

/// Incoherent rates in 1/s; delta_12 in Hz, temperature in K.
struct SystemRates {
  double gamma_c = 0.0;      // 3 -> 1
  double gamma_d_opt = 0.0;  // 3 -> 2
  double gamma_plus = 0.0;   // 1 -> 2
  double gamma_minus = 0.0;  // 2 -> 1
  double gamma_deph = 0.0;   // on |2>
  double delta_12 = 831e9;
  double temperature = 3.86;

  /// gamma_plus derived from gamma_minus by detailed balance.
  static SystemRates thermalized(double gamma_c, double gamma_d_opt,
                                 double gamma_minus, double gamma_deph,
                                 double delta_12, double temperature,
                                 const PhysicalConstants& constants = {});

  void validate() const;
  double max_rate() const;
};

class Hamiltonian {
 public:
  Hamiltonian() : elements_(Matrix3c::Zero()) {}
  explicit Hamiltonian(const Matrix3c& elements) : elements_(elements) {}
  const Matrix3c& elements() const { return elements_; }
  Complex operator()(int row, int col) const { return elements_(row, col); }

 private:
  Matrix3c elements_;
};

/// S_ij = sqrt(rate) |target><source|.
struct JumpOperator {
  int source = 0;
  int target = 0;
  double rate = 0.0;

  Matrix3c matrix() const;
};

Hamiltonian build_hamiltonian(const DriveConfig& drive);

/// Always five operators, in the order S_12 (gamma_+), S_21 (gamma_-),
/// S_31 (gamma_C), S_32 (gamma_D), S_22 (gamma_d). Zero rates give zero
/// matrices.
std::vector<JumpOperator> build_jump_operators(const SystemRates& rates);

/// -i[H, rho] + sum_k (S_k rho S_k^+ - 1/2 {S_k^+ S_k, rho})
Matrix3c lindblad_rhs(const DensityMatrix& rho, const Hamiltonian& h,
                      std::span<const JumpOperator> jumps);

/// Matrix of the linear map rho -> lindblad_rhs(rho) in the row-major
/// vectorization, assembled column by column from lindblad_rhs.
Superoperator build_liouvillian(const Hamiltonian& h,
                                std::span<const JumpOperator> jumps);

struct EvolveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Steady-state residual bound as a multiple of the largest rate.
  double steady_tol_factor = 1e-6;
  double trace_tol = 1e-6;
  std::size_t max_steps = 20'000'000;
};

using EvolutionObserver = std::function<void(double t, const DensityMatrix&)>;

/// Adaptive Dormand-Prince integration of the master equation to time t.
/// Throws NumericalInstability if the trace drifts beyond trace_tol.
DensityMatrix evolve(const DensityMatrix& initial, const Hamiltonian& h,
                     std::span<const JumpOperator> jumps, double t,
                     const EvolveOptions& options = {},
                     const EvolutionObserver& observer = {});

struct SteadyState {
  DensityMatrix rho;
  /// max |d rho / dt| at the returned state.
  double residual = 0.0;
  double tolerance = 0.0;
  std::size_t steps = 0;
};

inline constexpr double kDefaultSteadyStateTime = 1e-6;

/// Integrates to t_final and checks that the state is stationary.
/// Throws NonConvergence when max |d rho/dt| >= steady_tol_factor * (largest
/// rate, or largest |H| entry when all rates vanish).
SteadyState evolve_to_steady_state(const DensityMatrix& initial,
                                   const Hamiltonian& h,
                                   std::span<const JumpOperator> jumps,
                                   double t_final = kDefaultSteadyStateTime,
                                   const EvolveOptions& options = {});

/// Stationary state from one LU solve of the Liouvillian with the trace
/// condition substituted for the rho_11 equation. Throws SingularLiouvillian
/// when the stationary state is not unique.
DensityMatrix solve_steady_state(const Hamiltonian& h,
                                 std::span<const JumpOperator> jumps);

enum class SteadyStateMethod { Integrate, Direct };

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::Integrate;
  double t_final = kDefaultSteadyStateTime;
  EvolveOptions evolve;

  static SteadyStateOptions direct() {
    SteadyStateOptions o;
    o.method = SteadyStateMethod::Direct;
    return o;
  }
};

/// Dispatches on the method. Direct falls back to integration from |1><1|
/// when the Liouvillian has more than one stationary state.
DensityMatrix steady_state(const Hamiltonian& h,
                           std::span<const JumpOperator> jumps,
                           const SteadyStateOptions& options);

}  // namespace cptkit
