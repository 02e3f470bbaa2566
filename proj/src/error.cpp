#include "cfo/error.hpp"

namespace cfo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::NoEligibleSites: return "no_eligible_sites";
    case ErrorCode::InvalidParam: return "invalid_param";
    case ErrorCode::UnsupportedTraps: return "unsupported_traps";
    case ErrorCode::UnsupportedFeature: return "unsupported_feature";
    case ErrorCode::EmptyRegion: return "empty_region";
    case ErrorCode::RegionCrossesTrap: return "region_crosses_trap";
    case ErrorCode::RegionContainsTerminator: return "region_contains_terminator";
    case ErrorCode::SignatureMismatch: return "signature_mismatch";
    case ErrorCode::SelfInterleave: return "self_interleave";
    case ErrorCode::IneligibleSite: return "ineligible_site";
    case ErrorCode::UnknownPass: return "unknown_pass";
    case ErrorCode::DomainTooLarge: return "domain_too_large";
    case ErrorCode::RequiresSource: return "requires_source";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace cfo
