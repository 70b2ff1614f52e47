// dpsv/alignment.h

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

#ifndef DPSV_ALIGNMENT_H_
#define DPSV_ALIGNMENT_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "dpsv/base.h"

namespace dpsv {

enum class AlignmentSource : std::uint8_t { kHmmFb = 0, kHmmViterbi = 1, kDnn = 2 };

const char *AlignmentSourceName(AlignmentSource source);

/// Per-frame state posteriors P(s | x_t), T x 33.
struct AlignmentMatrix {
  Matrix posteriors;
  AlignmentSource source = AlignmentSource::kHmmFb;

  int NumFrames() const { return static_cast<int>(posteriors.rows()); }
  int NumStates() const { return static_cast<int>(posteriors.cols()); }
  bool FromHmm() const { return source != AlignmentSource::kDnn; }

  /// Throws RowNotNormalized if any row is negative or misses 1 by > tol.
  void CheckNormalized(double tol = 1e-6) const;
};

/// One-hot alignment from a hard state path.
AlignmentMatrix HardAlignment(const std::vector<int> &state_path, AlignmentSource source);

/// Index of the largest entry of each row (first on ties).
std::vector<int> ArgmaxStates(const AlignmentMatrix &align);

enum class PosteriorSource : std::uint8_t { kHmm = 0, kDnn = 1, kUbm = 2 };

/// Sparse mixture occupation posteriors gamma_{s,c,t}. Mixtures are indexed
/// flat (state-major, component-minor) within the owning model.
struct MixturePosteriors {
  using Entry = std::pair<int, double>;
  int num_mixtures = 0;
  std::vector<std::vector<Entry>> frames;
  PosteriorSource source = PosteriorSource::kHmm;

  int NumFrames() const { return static_cast<int>(frames.size()); }
  double FrameMass(int t) const;
  double TotalMass() const;
};

}  // namespace dpsv

#endif  // DPSV_ALIGNMENT_H_
