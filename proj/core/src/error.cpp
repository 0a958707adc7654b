#include "seqmc/error.hpp"

namespace seqmc {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidVocab: return "InvalidVocab";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::TokenOutOfRange: return "TokenOutOfRange";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::PositionNotMasked: return "PositionNotMasked";
    case Errc::NonPositiveTemperature: return "NonPositiveTemperature";
    case Errc::InvalidBoundary: return "InvalidBoundary";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::ScorerFailure: return "ScorerFailure";
    case Errc::ConnectFailure: return "ConnectFailure";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidTable: return "InvalidTable";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace seqmc
