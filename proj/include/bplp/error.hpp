#pragma once

#include <stdexcept>
#include <string>

namespace bplp {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file could not be parsed. Carries the 1-based line number (0 if n/a).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Graph is empty or a side is empty where a non-empty one is required.
class EmptyGraphError : public Error {
  using Error::Error;
};

/// A left node cannot be split into non-empty train and test parts.
class SplitError : public Error {
  using Error::Error;
};

/// Invalid argument or parameter combination (bad length, n too large, ...).
class ArgumentError : public Error {
  using Error::Error;
};

/// Katz-type series would not converge for the requested attenuation.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double admissible_max)
      : Error(what), admissible_max_(admissible_max) {}
  double admissible_max() const noexcept { return admissible_max_; }

 private:
  double admissible_max_;
};

/// Iterative solver hit its iteration cap.
class ConvergenceError : public Error {
  using Error::Error;
};

/// Not enough non-edges to satisfy a sampling request.
class CapacityError : public Error {
  using Error::Error;
};

/// Feature width or id range does not match the model / table.
class SchemaError : public Error {
  using Error::Error;
};

/// Data cannot support the requested fit (single class, singular scatter).
class DegenerateDataError : public Error {
  using Error::Error;
};

/// Metric is undefined for the given labels.
class MetricError : public Error {
  using Error::Error;
};

/// Problem is larger than a configured resource guard allows.
class GuardError : public Error {
  using Error::Error;
};

}  // namespace bplp
