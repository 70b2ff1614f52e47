// dpsv/map-speaker.h

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

#ifndef DPSV_MAP_SPEAKER_H_
#define DPSV_MAP_SPEAKER_H_

#include <string>
#include <utility>
#include <vector>

#include "dpsv/pgmm.h"

namespace dpsv {

/// Mean-only MAP adapted speaker model over the mixtures of a background
/// model (UBM, PGMM or the digit states of an HMM set).
struct SpeakerModel {
  std::string speaker_id;
  Matrix means;               // same shape as the background means
  std::string background_id;  // Pgmm::Fingerprint() of the background
  double relevance = 5.0;

  void Check() const;
};

/// mu_hat = F / (N + r) + mu for every mixture.
SpeakerModel MapAdapt(const Matrix &background_means, const SuffStats &stats, double relevance);

/// Average frame log-likelihood ratio between the speaker and background
/// model, weighting each mixture by its posterior. The sum is divided by
/// the total retained posterior mass.
double LlrScore(const SpeakerModel &speaker, const Matrix &background_means, const Matrix &background_vars,
                const MixturePosteriors &gammas, const FeatureSequence &feats);
double LlrScore(const SpeakerModel &speaker, const Pgmm &background, const MixturePosteriors &gammas,
                const FeatureSequence &feats);

/// Merges the statistics of every enrollment utterance, then adapts once.
SpeakerModel Enroll(const Pgmm &background, const std::vector<std::pair<MixturePosteriors, FeatureSequence>> &utts,
                    double relevance);

}  // namespace dpsv

#endif  // DPSV_MAP_SPEAKER_H_
