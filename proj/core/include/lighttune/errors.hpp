#pragma once

#include <stdexcept>
#include <string>

namespace lighttune {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension or shape mismatch between containers.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(what) {}
};

/// Semantically invalid input value (non-finite, out of range, ...).
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what) {}
};

/// Malformed text input. Carries a 1-based line (0 = unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) +
                               (column > 0 ? ", column " + std::to_string(column) : "") + ")"
                         : what),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Numerical failure at run time (overflow, NaN in model state, ...).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// Scenario stream exhausted.
class EndOfStreamError : public Error {
public:
    explicit EndOfStreamError(const std::string& what) : Error(what) {}
};

}  // namespace lighttune
