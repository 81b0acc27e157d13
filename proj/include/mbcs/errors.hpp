#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mbcs {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The local linear normal equations are numerically singular at the
/// requested evaluation point and bandwidth (all kernel mass effectively on
/// at most one distinct point). Callers may retry with a larger bandwidth.
class DegenerateDesign : public Error {
 public:
  DegenerateDesign(double eval_point, double bandwidth);
  double eval_point() const noexcept { return eval_point_; }
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  double eval_point_;
  double bandwidth_;
};

/// Every bandwidth in a cross-validation grid scored +infinity.
class AllDegenerate : public Error {
 public:
  using Error::Error;
};

/// A fit grid is too coarse (or does not cover the interval) for quadrature.
class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Spectrum file contained no data rows.
class EmptySpectrum : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure while reading or writing results.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbcs
