#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcmpc {

enum class ErrorKind {
  DimensionMismatch,
  StructureViolation,
  NotPSD,
  NotPD,
  NotSchur,
  SingularSystem,
  RiccatiDiverged,
  NotStabilized,
  SelectionFailed,
  QpFailure,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::StructureViolation: return "StructureViolation";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotPD: return "NotPD";
    case ErrorKind::NotSchur: return "NotSchur";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::RiccatiDiverged: return "RiccatiDiverged";
    case ErrorKind::NotStabilized: return "NotStabilized";
    case ErrorKind::SelectionFailed: return "SelectionFailed";
    case ErrorKind::QpFailure: return "QpFailure";
    case ErrorKind::Parse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace dcmpc
