#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace circphase {

enum class ErrorCode {
  // ingestion and alignment
  EmptyFile,
  HeaderMismatch,
  GridOverflow,
  GridMismatch,
  DuplicateChannel,
  Io,
  // generator and preprocessing
  InvalidParams,
  TooFewSamples,
  NegativeLux,
  // cosinor
  InsufficientSpan,
  SingularSystem,
  DegenerateFit,
  // circular
  NonFinite,
  ZeroVector,
  LengthMismatch,
  EmptyInput,
  // features
  TooFewPoints,
  NoCoverage,
  // models
  DegenerateData,
  InvalidHyperparams,
  DimensionMismatch,
  ModelFormat,
  // evaluation
  TooFewParticipants,
  EmptyStratum,
  UnknownParticipant,
  EmptyFold,
  Leakage,
  // cli
  UnknownSubcommand,
  ConfigParse,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by configuration or invocation rather than data.
bool is_config_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace circphase
