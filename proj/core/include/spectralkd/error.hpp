// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectralkd {

enum class ErrorCode {
  // NPY ingestion
  BadMagic,
  UnsupportedDtype,
  FortranOrderUnsupported,
  TruncatedPayload,
  NonFiniteValue,
  Io,
  // layout / shapes
  ShapeMismatch,
  SpatialMismatch,
  // selection / profiles
  KOutOfRange,
  BudgetExceeded,
  ZeroProfile,
  // losses
  LabelOutOfRange,
  InvalidArgument,
  // configuration and cli
  InvalidConfig,
  NoLayersFound,
  Usage,
  // training produced a non-finite value
  NumericFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Every failure raised by the
/// library is an `Error`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spectralkd
