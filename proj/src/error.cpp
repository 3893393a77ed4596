#include "circphase/error.hpp"

namespace circphase {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::GridOverflow: return "GridOverflow";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DuplicateChannel: return "DuplicateChannel";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NegativeLux: return "NegativeLux";
    case ErrorCode::InsufficientSpan: return "InsufficientSpan";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NoCoverage: return "NoCoverage";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InvalidHyperparams: return "InvalidHyperparams";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::TooFewParticipants: return "TooFewParticipants";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::UnknownParticipant: return "UnknownParticipant";
    case ErrorCode::EmptyFold: return "EmptyFold";
    case ErrorCode::Leakage: return "Leakage";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::ConfigParse: return "ConfigParse";
  }
  return "Unknown";
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidHyperparams:
    case ErrorCode::UnknownSubcommand:
    case ErrorCode::ConfigParse:
    case ErrorCode::UnknownParticipant:
    case ErrorCode::TooFewParticipants:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace circphase
