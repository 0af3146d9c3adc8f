// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/error.hpp"

namespace respira {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kAllSilent: return "AllSilent";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDegenerateDataset: return "DegenerateDataset";
    case ErrorCode::kSignatureMismatch: return "SignatureMismatch";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kNoMaskedFrames: return "NoMaskedFrames";
    case ErrorCode::kIdSetMismatch: return "IdSetMismatch";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidManifest: return "InvalidManifest";
    case ErrorCode::kInvalidScoreFile: return "InvalidScoreFile";
    case ErrorCode::kUsage: return "UsageError";
  }
  return "Unknown";
}

}  // namespace respira
