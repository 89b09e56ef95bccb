#pragma once

#include <stdexcept>
#include <string>

namespace pkopt {

/// Broad failure categories. The command line tool maps these onto exit
/// codes (numerical check 1, config 2, solver 3).
enum class ErrorKind {
  kNumericalCheck,
  kConfig,
  kSolver,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad or incomplete configuration input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

/// A structural identity or accuracy check failed.
class CheckError : public Error {
 public:
  explicit CheckError(const std::string& what)
      : Error(ErrorKind::kNumericalCheck, what) {}
};

/// An iterative solver (eigen, Newton, ODE, Riccati) did not converge.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what)
      : Error(ErrorKind::kSolver, what) {}
};

}  // namespace pkopt
