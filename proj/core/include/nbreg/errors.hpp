#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbreg {

/// Input outside the mathematical domain of an operation (r <= 0, q not in (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration (bad solver parameters, too few Monte-Carlo replicates, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line and column of the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A non-finite intermediate value appeared during evaluation.
class NumericError : public std::runtime_error {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  explicit NumericError(const std::string& what, std::size_t index = kNoIndex)
      : std::runtime_error(what), index_(index) {}

  /// Observation index at which the failure occurred, or kNoIndex.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Non-fatal messages accumulated by operations that warn instead of rejecting.
using Warnings = std::vector<std::string>;

}  // namespace nbreg
