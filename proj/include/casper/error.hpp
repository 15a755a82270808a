#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace casper {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A color, shape, relation, segment or preset identifier that is not known.
class UnknownName : public Error {
 public:
  UnknownName(std::string kind, std::string identifier)
      : Error("unknown " + kind + " '" + identifier + "'"),
        kind_(std::move(kind)),
        identifier_(std::move(identifier)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& identifier() const noexcept { return identifier_; }

 private:
  std::string kind_;
  std::string identifier_;
};

class LayoutMismatch : public Error {
 public:
  using Error::Error;
};

// Relevant dimensions exist but carry zero total salience, so the parallel
// match has no denominator.
class DegenerateDisplay : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace casper
