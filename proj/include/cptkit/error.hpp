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

#pragma once

#include <stdexcept>
#include <string>

namespace cptkit {

/// Broad failure class. The CLI maps Validation to exit code 2 and
/// Numerical to exit code 3.
enum class ErrorCategory { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message),
        category_(category),
        kind_(std::move(kind)) {}

  ErrorCategory category() const noexcept { return category_; }
  /// Short machine-readable name, e.g. "FitDiverged".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

#define CPTKIT_DEFINE_ERROR(Name, Category)                 \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& message)               \
        : Error(ErrorCategory::Category, #Name, message) {} \
  }

// Input and validation failures.
CPTKIT_DEFINE_ERROR(BadInput, Validation);
CPTKIT_DEFINE_ERROR(InsufficientPoints, Validation);
CPTKIT_DEFINE_ERROR(OutOfRange, Validation);
CPTKIT_DEFINE_ERROR(EmptyOverlap, Validation);
CPTKIT_DEFINE_ERROR(ConfigError, Validation);

// Numerical and fit failures.
CPTKIT_DEFINE_ERROR(NonConvergence, Numerical);
CPTKIT_DEFINE_ERROR(NumericalInstability, Numerical);
CPTKIT_DEFINE_ERROR(SingularLiouvillian, Numerical);
CPTKIT_DEFINE_ERROR(FitDiverged, Numerical);
CPTKIT_DEFINE_ERROR(UnboundedSensitivity, Numerical);
CPTKIT_DEFINE_ERROR(ModelAssumptionViolated, Numerical);
CPTKIT_DEFINE_ERROR(ZeroVariance, Numerical);
CPTKIT_DEFINE_ERROR(NegativeComponent, Numerical);
CPTKIT_DEFINE_ERROR(AllRejected, Numerical);
CPTKIT_DEFINE_ERROR(DegenerateComponents, Numerical);

#undef CPTKIT_DEFINE_ERROR

}  // namespace cptkit
