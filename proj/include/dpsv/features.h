// dpsv/features.h

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

#ifndef DPSV_FEATURES_H_
#define DPSV_FEATURES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpsv/base.h"

namespace dpsv {

inline constexpr int kRequiredSampleRate = 16000;

struct AudioClip {
  std::vector<std::int16_t> samples;
  int sample_rate = kRequiredSampleRate;
};

enum class FeatureKind : std::uint8_t { kFbank120 = 0, kMfcc60 = 1, kSpliced = 2 };

const char *FeatureKindName(FeatureKind kind);

struct FeatureSequence {
  Matrix frames;  // T x D, one row per frame
  double frame_shift_ms = 10.0;
  FeatureKind kind = FeatureKind::kMfcc60;

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

struct FeatureConfig {
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int n_mels = 40;
  int n_ceps = 20;
  int context = 5;
  double preemphasis = 0.97;

  void Check() const;
  int WindowSamples() const;
  int ShiftSamples() const;
};

/// Number of frames produced for a clip of `num_samples` samples:
/// floor((num_samples - window) / shift) + 1, or 0 when shorter than a window.
int NumFramesFor(std::int64_t num_samples, const FeatureConfig &cfg);

/// 40 log mel energies plus their deltas and delta-deltas (120 dims).
/// Hamming window, 0.97 pre-emphasis and the HTK mel scale.
FeatureSequence ExtractFbank(const AudioClip &audio, const FeatureConfig &cfg = {});

/// 20 cepstra (c0..c19, DCT-II of the log mel energies) plus deltas and
/// delta-deltas (60 dims).
FeatureSequence ExtractMfcc(const AudioClip &audio, const FeatureConfig &cfg = {});

/// Per-utterance mean and variance normalization. Dimensions with zero
/// variance come out as zeros.
FeatureSequence ApplyCmvn(const FeatureSequence &feats);

/// Stacks each frame with `context` neighbours on either side, repeating the
/// first/last frame at the edges. Input must be FBANK120.
FeatureSequence Splice(const FeatureSequence &feats, int context);

/// Orthonormal DCT-II, first `num_ceps` coefficients.
Vector Dct2(const Vector &log_energies, int num_ceps);

/// HTK regression deltas over +-`window` frames with edge replication.
Matrix ComputeDeltas(const Matrix &frames, int window = 2);

AudioClip ReadWav(const std::string &path);
void WriteWav(const AudioClip &audio, const std::string &path);

}  // namespace dpsv

#endif  // DPSV_FEATURES_H_
