#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dkg {

enum class ErrorCode {
  // tensor_core
  InvalidShape,
  InvalidPadding,
  DegenerateNorm,
  NotScalar,
  StaleTape,
  MissingGradient,
  NonFinite,
  // keygen_net
  InvalidResolution,
  EmptyDomain,
  DivergenceError,
  ResolutionMismatch,
  // key_model / io
  OutOfRange,
  IntegrityError,
  FormatError,
  IoError,
  // stream_cipher / analysis
  DimensionMismatch,
  EmptyInput,
  DegenerateSeries,
  // baselines
  InvalidChaosParams,
  InvalidKey,
  // randomness suite
  InsufficientData,
  NoCycles,
  // configuration
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dkg
