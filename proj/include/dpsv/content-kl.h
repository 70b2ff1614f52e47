// dpsv/content-kl.h

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

#ifndef DPSV_CONTENT_KL_H_
#define DPSV_CONTENT_KL_H_

#include <string>
#include <vector>

#include "dpsv/alignment.h"

namespace dpsv {

enum class ClassLevel { kState, kDigit };

ClassLevel ParseClassLevel(const std::string &name);
const char *ClassLevelName(ClassLevel level);

/// Maps each of the 33 states to a phonetic class: itself (STATE level) or
/// its word (DIGIT level, silence is the eleventh class).
struct PhoneticClassMap {
  ClassLevel level = ClassLevel::kDigit;
  std::vector<int> class_of_state;
  int num_classes = 0;

  static PhoneticClassMap Make(ClassLevel level);
};

struct ClassPosteriorSequence {
  Matrix posteriors;  // T x P
  PosteriorSource source = PosteriorSource::kHmm;
  bool smoothed = false;

  int NumFrames() const { return static_cast<int>(posteriors.rows()); }
  int NumClasses() const { return static_cast<int>(posteriors.cols()); }
};

/// Sums the member-state mass of every class, per frame.
ClassPosteriorSequence PoolClasses(const AlignmentMatrix &align, const PhoneticClassMap &map);

/// Same for mixture posteriors; `mixture_states` gives the global state of
/// every flat mixture index.
ClassPosteriorSequence PoolClasses(const MixturePosteriors &gammas, const std::vector<int> &mixture_states,
                                   const PhoneticClassMap &map);

/// (g + eps) / sum_p (g + eps), row by row.
ClassPosteriorSequence Smooth(const ClassPosteriorSequence &post, double epsilon);

/// (1/T) sum_t KL(hmm_t || dnn_t). Lower means a better content match.
double KlScore(const ClassPosteriorSequence &hmm_post, const ClassPosteriorSequence &dnn_post);

struct ContentDecision {
  double kl = 0.0;
  bool accept = false;
};

/// Pools, smooths and scores an HMM alignment of the prompted digits against
/// the DNN posteriors of the same utterance; accepts when kl <= threshold.
ContentDecision ContentVerify(const AlignmentMatrix &hmm_align, const AlignmentMatrix &dnn_post,
                              const PhoneticClassMap &map, double epsilon, double threshold);

}  // namespace dpsv

#endif  // DPSV_CONTENT_KL_H_
