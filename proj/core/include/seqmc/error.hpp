#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqmc {

enum class Errc {
  InvalidVocab,
  EmptySequence,
  TokenOutOfRange,
  PositionOutOfRange,
  PositionNotMasked,
  NonPositiveTemperature,
  InvalidBoundary,
  StateSpaceTooLarge,
  ScorerFailure,
  ConnectFailure,
  VersionMismatch,
  MalformedResponse,
  ConfigInvalid,
  NoConvergence,
  LengthMismatch,
  ShapeMismatch,
  InvalidTable,
  IoFailure,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace seqmc
