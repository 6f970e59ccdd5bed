#pragma once

#include <stdexcept>
#include <string>

namespace netcap {

// Broad failure classes; the CLI maps each to an exit code.
enum class ErrorClass { Validation, Numerical, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define NETCAP_DEFINE_ERROR(Name, Cls)                                 \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
  };

NETCAP_DEFINE_ERROR(ParseError, Validation)
NETCAP_DEFINE_ERROR(SelfLoopError, Validation)
NETCAP_DEFINE_ERROR(DisconnectedError, Validation)
NETCAP_DEFINE_ERROR(InvalidParams, Validation)
NETCAP_DEFINE_ERROR(ValidationError, Validation)
NETCAP_DEFINE_ERROR(CongestedError, Validation)
NETCAP_DEFINE_ERROR(DegenerateWindow, Validation)
NETCAP_DEFINE_ERROR(NonConvergent, Numerical)
NETCAP_DEFINE_ERROR(SingularSystem, Numerical)
NETCAP_DEFINE_ERROR(IoError, Io)

#undef NETCAP_DEFINE_ERROR

// Both ends of an estimate_rc bracket classified the same way.
class BadBracket : public Error {
 public:
  BadBracket(const std::string& what, double eta_low, double eta_high)
      : Error(ErrorClass::Validation, what), eta_low_(eta_low), eta_high_(eta_high) {}
  double eta_low() const noexcept { return eta_low_; }
  double eta_high() const noexcept { return eta_high_; }

 private:
  double eta_low_;
  double eta_high_;
};

}  // namespace netcap
