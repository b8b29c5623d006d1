#pragma once

#include <stdexcept>
#include <string>

namespace hommax {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateBasis : public Error {
 public:
  using Error::Error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class SingularPoint : public Error {
 public:
  using Error::Error;
};

/// Coefficient fails symmetry / positive-definiteness at some node.
class DegenerateCoefficient : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("iterative solver did not converge after " + std::to_string(iterations) +
              " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Malformed configuration or violated run precondition (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hommax
