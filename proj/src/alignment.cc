// src/alignment.cc

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

#include "dpsv/alignment.h"

namespace dpsv {

const char *AlignmentSourceName(AlignmentSource source) {
  switch (source) {
    case AlignmentSource::kHmmFb: return "HMM_FB";
    case AlignmentSource::kHmmViterbi: return "HMM_VITERBI";
    case AlignmentSource::kDnn: return "DNN";
  }
  return "?";
}

void AlignmentMatrix::CheckNormalized(double tol) const {
  for (Eigen::Index t = 0; t < posteriors.rows(); t++) {
    double sum = posteriors.row(t).sum();
    if (!(std::abs(sum - 1.0) <= tol) || (posteriors.row(t).array() < 0).any())
      Fail(ErrorCode::kRowNotNormalized, "row ", t, " sums to ", sum);
  }
}

AlignmentMatrix HardAlignment(const std::vector<int> &state_path, AlignmentSource source) {
  AlignmentMatrix out;
  out.source = source;
  out.posteriors = Matrix::Zero(static_cast<Eigen::Index>(state_path.size()), kNumStates);
  for (size_t t = 0; t < state_path.size(); t++) {
    if (state_path[t] < 0 || state_path[t] >= kNumStates)
      Fail(ErrorCode::kShapeMismatch, "state ", state_path[t], " out of range");
    out.posteriors(static_cast<Eigen::Index>(t), state_path[t]) = 1.0;
  }
  return out;
}

std::vector<int> ArgmaxStates(const AlignmentMatrix &align) {
  std::vector<int> out(align.NumFrames());
  for (int t = 0; t < align.NumFrames(); t++) {
    Eigen::Index idx;
    align.posteriors.row(t).maxCoeff(&idx);
    out[t] = static_cast<int>(idx);
  }
  return out;
}

double MixturePosteriors::FrameMass(int t) const {
  double sum = 0.0;
  for (const auto &e : frames[t]) sum += e.second;
  return sum;
}

double MixturePosteriors::TotalMass() const {
  double sum = 0.0;
  for (int t = 0; t < NumFrames(); t++) sum += FrameMass(t);
  return sum;
}

}  // namespace dpsv
