#pragma once

#include <stdexcept>
#include <string>

namespace riesz {

enum class ErrorKind {
  InvalidArgument,
  EqualEnds,
  EmptySet,
  OutsideDomain,
  NotSubharmonic,
  RadiusExhausted,
  OutOfRange,
  SingularSystem,
  NotIntegrable,
  NotTransient,
  HypothesisViolated,
  ConfigInvalid,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EqualEnds: return "EqualEnds";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::OutsideDomain: return "OutsideDomain";
    case ErrorKind::NotSubharmonic: return "NotSubharmonic";
    case ErrorKind::RadiusExhausted: return "RadiusExhausted";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NotIntegrable: return "NotIntegrable";
    case ErrorKind::NotTransient: return "NotTransient";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace riesz
