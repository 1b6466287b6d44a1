// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ecal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real-domain violation inside a dual or scalar expression.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched derivative-array lengths or seed indices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Nonlinear or linear solve failure (non-convergence, inversion, singular).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecal
