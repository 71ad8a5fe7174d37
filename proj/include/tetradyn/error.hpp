#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tetradyn {

enum class ErrorKind {
  InvalidInput,
  SingularInput,
  NotSymmetric,
  NoConvergence,
  DegenerateFace,
  DegenerateImage,
  StepTooSmall,
  ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SingularInput: return "SingularInput";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateFace: return "DegenerateFace";
    case ErrorKind::DegenerateImage: return "DegenerateImage";
    case ErrorKind::StepTooSmall: return "StepTooSmall";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI, batch runners) can map it to a row flag or exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tetradyn
