// dpsv/base.h

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

#ifndef DPSV_BASE_H_
#define DPSV_BASE_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dpsv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Phonetic inventory: ten digit words plus silence, three emitting states
// each, indexed word-major ("0" -> 0..2, ..., "9" -> 27..29, sil -> 30..32).
inline constexpr int kNumWords = 11;
inline constexpr int kSilenceWord = 10;
inline constexpr int kStatesPerWord = 3;
inline constexpr int kNumStates = kNumWords * kStatesPerWord;
inline constexpr int kNumDigitStates = 10 * kStatesPerWord;

inline constexpr double kLog2Pi = 1.8378770664093454836;
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool IsSilenceState(int state) { return state >= kNumDigitStates; }

enum class ErrorCode {
  kClipTooShort,
  kBadSampleRate,
  kTooFewFrames,
  kWrongKind,
  kTooFewSamples,
  kDegenerateData,
  kDimMismatch,
  kUnknownToken,
  kTooShort,
  kMissingDigitCoverage,
  kUnalignableUtterance,
  kSourceMismatch,
  kMissingClass,
  kNonFiniteLoss,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kRowNotNormalized,
  kWrongStateCount,
  kStarvedState,
  kEmptyState,
  kShapeMismatch,
  kNoRetainedFrames,
  kEmptyEnrollment,
  kRankTooLarge,
  kInconsistentBackground,
  kZeroVector,
  kInsufficientSpeakers,
  kBadLdaDim,
  kNotSmoothed,
  kWidthMismatch,
  kUnknownCondition,
  kOneClassOnly,
  kConfigInvalid,
  kParseError,
  kIoError,
  kChecksumMismatch,
};

const char *ErrorCodeName(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// one of the codes above; the CLI maps them to exit status 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code),
        detail_(what) {}
  ErrorCode code() const { return code_; }
  // The message without the code name.
  const std::string &detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Error carrying a byte offset into the file being parsed.
class PositionedError : public Error {
 public:
  PositionedError(ErrorCode code, std::uint64_t offset, const std::string &what)
      : Error(code, what + " at byte offset " + std::to_string(offset)),
        offset_(offset),
        bare_(what) {}
  std::uint64_t offset() const { return offset_; }
  // The message without the code name and offset.
  const std::string &bare() const { return bare_; }

 private:
  std::uint64_t offset_;
  std::string bare_;
};

// Throws an Error whose message is the streamed concatenation of args.
template <typename... Args>
[[noreturn]] void Fail(ErrorCode code, const Args &...args) {
  std::ostringstream os;
  (os << ... << args);
  throw Error(code, os.str());
}

/// Writes "WARNING: msg" to stderr unless warnings are silenced.
void LogWarning(const std::string &msg);
void SetWarningsEnabled(bool enabled);

/// 64-bit FNV-1a over raw bytes, used to fingerprint models.
std::uint64_t Fnv1a(const void *data, std::size_t size, std::uint64_t seed = 1469598103934665603ull);

inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(sum(exp(v))) with max subtraction; -inf for an all -inf input.
inline double LogSumExp(const Vector &v) {
  double max = v.maxCoeff();
  if (max == kLogZero) return kLogZero;
  return max + std::log((v.array() - max).exp().sum());
}

}  // namespace dpsv

#endif  // DPSV_BASE_H_
