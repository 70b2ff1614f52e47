// src/base.cc

// Copyright 2026  The dpsv Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dpsv/base.h"

#include <atomic>
#include <iostream>

namespace dpsv {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kClipTooShort: return "ClipTooShort";
    case ErrorCode::kBadSampleRate: return "BadSampleRate";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kWrongKind: return "WrongKind";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kMissingDigitCoverage: return "MissingDigitCoverage";
    case ErrorCode::kUnalignableUtterance: return "UnalignableUtterance";
    case ErrorCode::kSourceMismatch: return "SourceMismatch";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kRowNotNormalized: return "RowNotNormalized";
    case ErrorCode::kWrongStateCount: return "WrongStateCount";
    case ErrorCode::kStarvedState: return "StarvedState";
    case ErrorCode::kEmptyState: return "EmptyState";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNoRetainedFrames: return "NoRetainedFrames";
    case ErrorCode::kEmptyEnrollment: return "EmptyEnrollment";
    case ErrorCode::kRankTooLarge: return "RankTooLarge";
    case ErrorCode::kInconsistentBackground: return "InconsistentBackground";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorCode::kBadLdaDim: return "BadLdaDim";
    case ErrorCode::kNotSmoothed: return "NotSmoothed";
    case ErrorCode::kWidthMismatch: return "WidthMismatch";
    case ErrorCode::kUnknownCondition: return "UnknownCondition";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

namespace {
std::atomic<bool> warnings_enabled{true};
}

void LogWarning(const std::string &msg) {
  if (warnings_enabled) std::cerr << "WARNING: " << msg << '\n';
}

void SetWarningsEnabled(bool enabled) { warnings_enabled = enabled; }

std::uint64_t Fnv1a(const void *data, std::size_t size, std::uint64_t seed) {
  const auto *bytes = static_cast<const unsigned char *>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; i++) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dpsv
