// SPDX-License-Identifier: Apache-2.0
#include "spectralkd/error.hpp"

namespace spectralkd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::FortranOrderUnsupported: return "FortranOrderUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SpatialMismatch: return "SpatialMismatch";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ZeroProfile: return "ZeroProfile";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoLayersFound: return "NoLayersFound";
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

}  // namespace spectralkd
