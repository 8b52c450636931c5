#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dospde {

/// Base of every error thrown by the library. `kind()` is a short
/// machine-readable tag; the CLI prints errors as "E:<kind>:<detail>".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

/// Malformed expression source. `offset` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& expected)
      : Error("parse", "offset " + std::to_string(offset) + ": expected " + expected),
        offset_(offset),
        expected_(expected) {}

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

/// Identifier outside the variable set {t, x, y, z1} and the builtin functions.
class UnknownIdentifier : public Error {
 public:
  UnknownIdentifier(std::size_t offset, const std::string& name)
      : Error("parse", "unknown identifier '" + name + "' at offset " + std::to_string(offset)),
        offset_(offset),
        name_(name) {}

  std::size_t offset() const { return offset_; }
  const std::string& name() const { return name_; }

 private:
  std::size_t offset_;
  std::string name_;
};

/// Builtin called with the wrong number of arguments.
class ArityError : public Error {
 public:
  ArityError(std::size_t offset, const std::string& name, int expected, int got)
      : Error("parse", "'" + name + "' takes " + std::to_string(expected) + " argument(s), got " +
                           std::to_string(got) + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero, sqrt of a negative, or a non-finite intermediate value.
class EvalError : public Error {
 public:
  explicit EvalError(const std::string& detail) : Error("eval", detail) {}
};

class ObstacleCrossing : public Error {
 public:
  explicit ObstacleCrossing(const std::string& detail) : Error("obstacle", detail) {}
};

class NotContractive : public Error {
 public:
  explicit NotContractive(const std::string& detail) : Error("contraction", detail) {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iters, double last_norm_sq)
      : Error("noconvergence", "no convergence after " + std::to_string(iters) +
                                   " iterations, last increment norm_sq " +
                                   std::to_string(last_norm_sq)),
        iterations_(iters),
        last_norm_sq_(last_norm_sq) {}

  int iterations() const { return iterations_; }
  double last_norm_sq() const { return last_norm_sq_; }

 private:
  int iterations_;
  double last_norm_sq_;
};

class IllPosed : public Error {
 public:
  explicit IllPosed(const std::string& detail) : Error("illposed", detail) {}
};

class PreconditionUnmet : public Error {
 public:
  explicit PreconditionUnmet(const std::string& detail) : Error("precondition", detail) {}
};

class UnsupportedPhi : public Error {
 public:
  explicit UnsupportedPhi(const std::string& name) : Error("phi", "unsupported Phi '" + name + "'") {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& detail) : Error("config", detail) {}
};

}  // namespace dospde
