#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smallcar::sysid {

/// Malformed log input. `row()` is the 1-based data row (0 for header/file level).
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::size_t row, const std::string& what)
      : std::runtime_error(source + (row > 0 ? ":row " + std::to_string(row) : std::string{}) +
                           ": " + what),
        row_(row) {}
  [[nodiscard]] std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

class InsufficientDataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Correlation is undefined because one of the series has zero variance.
class UndefinedCorrelationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The optimizer hit a non-finite loss or gradient.
class FitError : public std::runtime_error {
public:
  FitError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  [[nodiscard]] std::size_t iteration() const { return iteration_; }

private:
  std::size_t iteration_;
};

}  // namespace smallcar::sysid
