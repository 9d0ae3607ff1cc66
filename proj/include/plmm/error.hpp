#pragma once

#include <stdexcept>
#include <string>

namespace plmm {

enum class ErrorKind {
  invalid_input,  // bad arguments, malformed files, dimension mismatches
  numerical,      // solver or decomposition failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorKind::invalid_input, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

/// Rethrows `e` with `prefix` prepended, keeping its concrete type.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix) {
  if (e.kind() == ErrorKind::numerical) throw NumericalError(prefix + e.what());
  throw InputError(prefix + e.what());
}

}  // namespace plmm
