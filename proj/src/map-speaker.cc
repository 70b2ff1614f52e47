// src/map-speaker.cc

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

#include "dpsv/map-speaker.h"

namespace dpsv {

void SpeakerModel::Check() const {
  if (means.size() == 0) Fail(ErrorCode::kShapeMismatch, "speaker model has no means");
  if (!means.allFinite()) Fail(ErrorCode::kDegenerateData, "speaker model has non-finite means");
  if (!(relevance > 0)) Fail(ErrorCode::kConfigInvalid, "relevance factor must be positive");
}

SpeakerModel MapAdapt(const Matrix &background_means, const SuffStats &stats, double relevance) {
  if (!(relevance > 0)) Fail(ErrorCode::kConfigInvalid, "relevance factor must be positive, got ", relevance);
  if (stats.NumMixtures() != background_means.rows() || stats.Dim() != background_means.cols())
    Fail(ErrorCode::kShapeMismatch, "statistics ", stats.NumMixtures(), "x", stats.Dim(), " vs background ",
         background_means.rows(), "x", background_means.cols());
  SpeakerModel out;
  out.relevance = relevance;
  out.background_id = stats.background_id;
  out.means = background_means;
  for (int m = 0; m < stats.NumMixtures(); m++)
    out.means.row(m) += stats.first.row(m) / (stats.occupancy(m) + relevance);
  return out;
}

double LlrScore(const SpeakerModel &speaker, const Matrix &background_means, const Matrix &background_vars,
                const MixturePosteriors &gammas, const FeatureSequence &feats) {
  if (speaker.means.rows() != background_means.rows() || speaker.means.cols() != background_means.cols() ||
      background_vars.rows() != background_means.rows() || background_vars.cols() != background_means.cols())
    Fail(ErrorCode::kShapeMismatch, "speaker model and background disagree in shape");
  if (gammas.num_mixtures != background_means.rows() || gammas.NumFrames() != feats.NumFrames() ||
      feats.Dim() != background_means.cols())
    Fail(ErrorCode::kShapeMismatch, "posteriors or features do not match the background model");
  double total = 0.0, mass = 0.0;
  for (int t = 0; t < feats.NumFrames(); t++) {
    for (const auto &[m, g] : gammas.frames[t]) {
      // log N(x; mu_hat, S) - log N(x; mu, S), the normalizers cancel.
      double diff = 0.0;
      for (int d = 0; d < feats.Dim(); d++) {
        double x = feats.frames(t, d);
        double a = x - background_means(m, d), b = x - speaker.means(m, d);
        diff += (a * a - b * b) / (2.0 * background_vars(m, d));
      }
      total += g * diff;
      mass += g;
    }
  }
  if (mass < 1e-8) Fail(ErrorCode::kNoRetainedFrames, "no frame retains posterior mass");
  return total / mass;
}

double LlrScore(const SpeakerModel &speaker, const Pgmm &background, const MixturePosteriors &gammas,
                const FeatureSequence &feats) {
  if (!speaker.background_id.empty() && speaker.background_id != background.Fingerprint())
    Fail(ErrorCode::kInconsistentBackground, "speaker ", speaker.speaker_id, " was enrolled on another background");
  return LlrScore(speaker, background.Means(), background.Variances(), gammas, feats);
}

SpeakerModel Enroll(const Pgmm &background, const std::vector<std::pair<MixturePosteriors, FeatureSequence>> &utts,
                    double relevance) {
  if (utts.empty()) Fail(ErrorCode::kEmptyEnrollment, "no enrollment utterances");
  Matrix means = background.Means();
  SuffStats stats = SuffStats::Zero(static_cast<int>(means.rows()), static_cast<int>(means.cols()));
  for (const auto &[gammas, feats] : utts) stats.Add(AccumulateStats(gammas, feats, means));
  stats.background_id = background.Fingerprint();
  return MapAdapt(means, stats, relevance);
}

}  // namespace dpsv
