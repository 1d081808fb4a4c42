#pragma once

#include <stdexcept>
#include <string>

namespace hesim {

enum class ErrorKind {
  ZeroLeadingCoefficient,
  SingularPade,
  DenominatorZero,
  NoValidRange,
  EmptyVariableSet,
  DimensionMismatch,
  IslandWithoutGeneration,
  PowerFlowInfeasible,
  SingularJacobian,
  AnchorInconsistent,
  NoConvergenceAtAlpha1,
  ZeroBoundaryVoltage,
  NotSteady,
  SegmentFailure,
  PastCollapse,
  Unreachable,
  StepRejectionLimit,
  ParseError,
  ValidationError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ZeroLeadingCoefficient: return "ZeroLeadingCoefficient";
    case ErrorKind::SingularPade: return "SingularPade";
    case ErrorKind::DenominatorZero: return "DenominatorZero";
    case ErrorKind::NoValidRange: return "NoValidRange";
    case ErrorKind::EmptyVariableSet: return "EmptyVariableSet";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IslandWithoutGeneration: return "IslandWithoutGeneration";
    case ErrorKind::PowerFlowInfeasible: return "PowerFlowInfeasible";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::AnchorInconsistent: return "AnchorInconsistent";
    case ErrorKind::NoConvergenceAtAlpha1: return "NoConvergenceAtAlpha1";
    case ErrorKind::ZeroBoundaryVoltage: return "ZeroBoundaryVoltage";
    case ErrorKind::NotSteady: return "NotSteady";
    case ErrorKind::SegmentFailure: return "SegmentFailure";
    case ErrorKind::PastCollapse: return "PastCollapse";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::StepRejectionLimit: return "StepRejectionLimit";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  int line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  int line_;
  std::string reason_;
};

}  // namespace hesim
