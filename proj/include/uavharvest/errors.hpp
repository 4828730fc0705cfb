#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uavh {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter is out of its documented range. `field()` names the offender.
class InvalidParameter : public Error {
 public:
  InvalidParameter(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Inputs are valid numbers but outside the physical model's domain
// (e.g. vertical acceleration reaching gravity).
class ModelDomainError : public Error {
 public:
  using Error::Error;
};

enum class InfeasibleKind { height, no_sign_change, pathological_regime, user };

// The requested operating point admits no solution.
class InfeasibleError : public Error {
 public:
  InfeasibleError(InfeasibleKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  InfeasibleKind kind() const noexcept { return kind_; }

 private:
  InfeasibleKind kind_;
};

// A numerical routine failed to deliver a usable answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Scenario document problems; `path` is the dotted key path, `line` is 1-based
// (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(std::string path, int line, const std::string& what)
      : Error(format(path, line, what)), path_(std::move(path)), line_(line) {}
  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& path, int line,
                            const std::string& what) {
    std::string out = path.empty() ? std::string("<root>") : path;
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out + ": " + what;
  }
  std::string path_;
  int line_;
};

}  // namespace uavh
