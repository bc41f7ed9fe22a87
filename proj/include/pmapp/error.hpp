#pragma once

#include <stdexcept>
#include <string>

namespace pmapp {

enum class ErrorKind {
  kInvalidSpec,
  kInvalidArgument,
  kOutOfDomain,
  kUnreachable,
  kDegenerateOverlap,
  kCyclicConstraints,
  kPeriodTooSmall,
  kNonfiniteResidual,
  kDiverged,
  kInvalidPlan,
  kUnstableQueue,
  kParse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pmapp
