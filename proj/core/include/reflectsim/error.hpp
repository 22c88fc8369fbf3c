// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reflectsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A simulation produced a non-finite state. `step()` is the index of the
/// grid point that could not be computed (1-based in the output path).
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Adaptive quadrature could not reach the requested tolerance on [lo, hi].
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double lo, double hi)
      : Error(what + " on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// The diffusion coefficient is (numerically) zero somewhere it is divided by.
class SingularDiffusionError : public Error {
 public:
  SingularDiffusionError(const std::string& what, double x)
      : Error(what + " at x = " + std::to_string(x)), x_(x) {}

  double x() const noexcept { return x_; }

 private:
  double x_;
};

}  // namespace reflectsim
