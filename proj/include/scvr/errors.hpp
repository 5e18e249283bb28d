#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scvr {

/// Bad argument to a library call (empty batch, index out of range, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ComponentKind { inner_value, inner_jacobian, outer_value, outer_gradient };

inline const char* to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::inner_value: return "G";
    case ComponentKind::inner_jacobian: return "dG";
    case ComponentKind::outer_value: return "F";
    case ComponentKind::outer_gradient: return "gradF";
  }
  return "?";
}

/// A component function produced a non-finite value. The index is stored
/// 0-based; the message uses the 1-based index.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(ComponentKind kind, std::size_t index)
      : std::runtime_error(std::string("non-finite output from ") + to_string(kind) + "_" +
                           std::to_string(index + 1)),
        kind_(kind),
        index_(index) {}

  ComponentKind kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }

 private:
  ComponentKind kind_;
  std::size_t index_;
};

/// Finite-difference or enumeration oracle could not produce a value.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem construction failed (bad sigma, degenerate similarities, ...).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` and `column` are 1-based; 0 means unknown.
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

}  // namespace scvr
