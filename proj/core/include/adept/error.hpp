// Copyright 2026 The ADEPT-Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adept {

/// Base class of every error raised by the library. `exit_code()` is the
/// process exit status the command-line tool maps the error to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration, arguments, or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// A NaN/Inf was produced, or an optimisation step could not be applied.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A structural invariant was violated (shape mismatch, plan/model mismatch,
/// divergent merge sources, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class ShapeError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

}  // namespace adept
