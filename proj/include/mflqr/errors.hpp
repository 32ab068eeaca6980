#pragma once

#include <stdexcept>
#include <string>

namespace mflqr {

// Base class for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error("DimensionMismatch", what) {}
};

class NotPSD : public Error {
 public:
  NotPSD(const std::string& what, double min_eigenvalue)
      : Error("NotPSD", what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class SingularInnerMatrix : public Error {
 public:
  SingularInnerMatrix(const std::string& what, double rcond)
      : Error("SingularInnerMatrix", what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, long iterations, double residual)
      : Error("NotConverged", what),
        iterations_(iterations),
        residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

class SingularGain : public Error {
 public:
  SingularGain(const std::string& what, int t)
      : Error("SingularGain", what), t_(t) {}
  int time() const { return t_; }

 private:
  int t_;
};

class LeaderlessMode : public Error {
 public:
  explicit LeaderlessMode(const std::string& what)
      : Error("LeaderlessMode", what) {}
};

class Diverged : public Error {
 public:
  Diverged(const std::string& what, int t) : Error("Diverged", what), t_(t) {}
  int time() const { return t_; }

 private:
  int t_;
};

class TooLarge : public Error {
 public:
  explicit TooLarge(const std::string& what) : Error("TooLarge", what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : Error("ConfigError", pointer + ": " + what), pointer_(pointer) {}
  // JSON pointer to the offending key.
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace mflqr
