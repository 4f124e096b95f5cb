#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mumimo {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A Gram-Schmidt pivot had (numerically) zero residual norm.
struct RankDeficient : Error {
  using Error::Error;
};

/// Gauss-Jordan found no usable pivot.
struct Singular : Error {
  using Error::Error;
};

/// Every candidate antenna subset was unusable.
struct AllSingular : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct UnsupportedScheme : Error {
  using Error::Error;
};

/// Fixture parse failure; line and column are 1-based (column counts tokens).
struct ParseError : Error {
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line(line),
        column(column) {}

  std::size_t line;
  std::size_t column;
};

}  // namespace mumimo
