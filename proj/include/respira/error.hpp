// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace respira {

enum class ErrorCode {
  kUnsupportedFormat,
  kCorruptHeader,
  kEmptyAudio,
  kAllSilent,
  kTooShort,
  kShapeMismatch,
  kNonFinite,
  kDegenerateDataset,
  kSignatureMismatch,
  kVersionMismatch,
  kCorruptCheckpoint,
  kNotNormalized,
  kNoMaskedFrames,
  kIdSetMismatch,
  kInvalidWeights,
  kSingleClass,
  kTooFewSamples,
  kIoError,
  kInvalidConfig,
  kInvalidManifest,
  kInvalidScoreFile,
  kUsage,
};

std::string_view ToString(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace respira
