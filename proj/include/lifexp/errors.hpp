#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lifexp {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV input. Carries the 1-based line of the offending record.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Column-level problems: duplicates, absent names, wrong cell types.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: rule sets, pipeline config, grids.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Matrix shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design matrix is numerically rank deficient.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t rank)
      : Error(what), rank_(rank) {}
  std::size_t rank() const { return rank_; }

 private:
  std::size_t rank_;
};

/// An iterative method did not converge within its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Pearson correlation requested on a zero-variance input.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

/// Invalid chart description handed to the SVG renderer.
class ChartSpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lifexp
