#include "dkg/error.hpp"

namespace dkg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::InvalidPadding: return "InvalidPadding";
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::StaleTape: return "StaleTape";
    case ErrorCode::MissingGradient: return "MissingGradient";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidResolution: return "InvalidResolution";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::DivergenceError: return "DivergenceError";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::InvalidChaosParams: return "InvalidChaosParams";
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoCycles: return "NoCycles";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace dkg
