#pragma once

#include <stdexcept>
#include <string>

namespace cfo {

enum class ErrorCode {
  InvalidInput,
  NoEligibleSites,
  InvalidParam,
  UnsupportedTraps,
  UnsupportedFeature,
  EmptyRegion,
  RegionCrossesTrap,
  RegionContainsTerminator,
  SignatureMismatch,
  SelfInterleave,
  IneligibleSite,
  UnknownPass,
  DomainTooLarge,
  RequiresSource,
  Internal,
};

const char* to_string(ErrorCode code);

/// Error raised by library operations. `Internal` marks a broken invariant
/// (a bug), every other code is a property of the input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cfo
