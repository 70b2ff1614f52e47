// src/content-kl.cc

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

#include "dpsv/content-kl.h"

namespace dpsv {

ClassLevel ParseClassLevel(const std::string &name) {
  if (name == "state" || name == "STATE") return ClassLevel::kState;
  if (name == "digit" || name == "DIGIT") return ClassLevel::kDigit;
  Fail(ErrorCode::kConfigInvalid, "unknown phonetic class level '", name, "'");
}

const char *ClassLevelName(ClassLevel level) { return level == ClassLevel::kState ? "state" : "digit"; }

PhoneticClassMap PhoneticClassMap::Make(ClassLevel level) {
  PhoneticClassMap map;
  map.level = level;
  map.class_of_state.resize(kNumStates);
  for (int s = 0; s < kNumStates; s++) map.class_of_state[s] = level == ClassLevel::kState ? s : s / kStatesPerWord;
  map.num_classes = level == ClassLevel::kState ? kNumStates : kNumWords;
  return map;
}

ClassPosteriorSequence PoolClasses(const AlignmentMatrix &align, const PhoneticClassMap &map) {
  if (align.NumStates() != static_cast<int>(map.class_of_state.size()))
    Fail(ErrorCode::kWidthMismatch, "alignment has ", align.NumStates(), " states, class map covers ",
         map.class_of_state.size());
  ClassPosteriorSequence out;
  out.source = align.FromHmm() ? PosteriorSource::kHmm : PosteriorSource::kDnn;
  out.posteriors = Matrix::Zero(align.NumFrames(), map.num_classes);
  for (int s = 0; s < align.NumStates(); s++) out.posteriors.col(map.class_of_state[s]) += align.posteriors.col(s);
  return out;
}

ClassPosteriorSequence PoolClasses(const MixturePosteriors &gammas, const std::vector<int> &mixture_states,
                                   const PhoneticClassMap &map) {
  if (static_cast<int>(mixture_states.size()) != gammas.num_mixtures)
    Fail(ErrorCode::kWidthMismatch, "state map covers ", mixture_states.size(), " mixtures, posteriors have ",
         gammas.num_mixtures);
  ClassPosteriorSequence out;
  out.source = gammas.source == PosteriorSource::kDnn ? PosteriorSource::kDnn : PosteriorSource::kHmm;
  out.posteriors = Matrix::Zero(gammas.NumFrames(), map.num_classes);
  for (int t = 0; t < gammas.NumFrames(); t++) {
    for (const auto &[m, g] : gammas.frames[t]) {
      int s = mixture_states[m];
      if (s < 0 || s >= static_cast<int>(map.class_of_state.size()))
        Fail(ErrorCode::kWidthMismatch, "mixture ", m, " maps to state ", s, " outside the class map");
      out.posteriors(t, map.class_of_state[s]) += g;
    }
  }
  return out;
}

ClassPosteriorSequence Smooth(const ClassPosteriorSequence &post, double epsilon) {
  if (!(epsilon > 0)) Fail(ErrorCode::kConfigInvalid, "smoothing constant must be positive, got ", epsilon);
  ClassPosteriorSequence out = post;
  out.posteriors.array() += epsilon;
  for (int t = 0; t < out.NumFrames(); t++) out.posteriors.row(t) /= out.posteriors.row(t).sum();
  out.smoothed = true;
  return out;
}

double KlScore(const ClassPosteriorSequence &hmm_post, const ClassPosteriorSequence &dnn_post) {
  if (!hmm_post.smoothed || !dnn_post.smoothed) Fail(ErrorCode::kNotSmoothed, "KL needs smoothed posteriors");
  if (hmm_post.NumFrames() != dnn_post.NumFrames() || hmm_post.NumClasses() != dnn_post.NumClasses())
    Fail(ErrorCode::kShapeMismatch, "posterior sequences ", hmm_post.NumFrames(), "x", hmm_post.NumClasses(), " and ",
         dnn_post.NumFrames(), "x", dnn_post.NumClasses());
  if (hmm_post.source != PosteriorSource::kHmm || dnn_post.source != PosteriorSource::kDnn)
    Fail(ErrorCode::kSourceMismatch, "first sequence must come from an HMM, second from a DNN");
  if (hmm_post.NumFrames() == 0) Fail(ErrorCode::kTooFewFrames, "empty posterior sequences");
  double total = 0.0;
  for (int t = 0; t < hmm_post.NumFrames(); t++)
    for (int p = 0; p < hmm_post.NumClasses(); p++) {
      double a = hmm_post.posteriors(t, p), b = dnn_post.posteriors(t, p);
      total += a * std::log(a / b);
    }
  return total / hmm_post.NumFrames();
}

ContentDecision ContentVerify(const AlignmentMatrix &hmm_align, const AlignmentMatrix &dnn_post,
                              const PhoneticClassMap &map, double epsilon, double threshold) {
  ClassPosteriorSequence h = Smooth(PoolClasses(hmm_align, map), epsilon);
  ClassPosteriorSequence d = Smooth(PoolClasses(dnn_post, map), epsilon);
  ContentDecision out;
  out.kl = KlScore(h, d);
  out.accept = out.kl <= threshold;
  return out;
}

}  // namespace dpsv
