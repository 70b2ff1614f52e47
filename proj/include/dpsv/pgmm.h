// dpsv/pgmm.h

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

#ifndef DPSV_PGMM_H_
#define DPSV_PGMM_H_

#include <string>
#include <vector>

#include "dpsv/alignment.h"
#include "dpsv/diag-gmm.h"
#include "dpsv/features.h"
#include "dpsv/hmm.h"

namespace dpsv {

/// Model-state marker meaning "every frame" (the single state of an
/// unsupervised UBM).
inline constexpr int kAllFrames = -1;

/// A GMM per phonetic state. Serves as the background model for every
/// speaker system: the DNN-aligned PGMM (30 digit states), the digit states
/// of a GMM-HMM, or a single-state UBM.
struct Pgmm {
  std::vector<int> states;      // global state index per model state
  std::vector<DiagGmm> gmms;
  Vector variance_floor;        // absolute, per dimension

  int NumStates() const { return static_cast<int>(states.size()); }
  int Dim() const { return gmms.empty() ? 0 : gmms[0].Dim(); }
  int NumMixtures() const;
  std::vector<int> MixtureOffsets() const;  // NumStates()+1 entries
  Matrix Means() const;       // NumMixtures() x Dim()
  Matrix Variances() const;
  bool IsUbm() const { return states.size() == 1 && states[0] == kAllFrames; }
  /// Hex fingerprint of the parameters; speaker models and i-vector
  /// extractors record the background they were built on.
  std::string Fingerprint() const;
  void Check() const;
};

Pgmm PgmmFromHmmSet(const HmmSet &hmms);
Pgmm PgmmFromUbm(const DiagGmm &ubm, const Vector &variance_floor);

/// Hard-assigns each frame to its argmax state and trains one GMM per digit
/// state (split + EM up to `num_components`). Silence frames are skipped.
Pgmm InitPgmm(const std::vector<AlignmentMatrix> &alignments, const std::vector<FeatureSequence> &feats,
              int num_components, const GmmTrainConfig &gmm_cfg = {});

/// EM accumulator under a fixed external alignment.
class PgmmEmAccumulator {
 public:
  explicit PgmmEmAccumulator(const Pgmm &pgmm);
  /// Adds one utterance; silence-state mass is dropped.
  void Accumulate(const Pgmm &pgmm, const AlignmentMatrix &align, const FeatureSequence &feats);
  void Add(const PgmmEmAccumulator &other);
  /// Sum_t Sum_s P(s|x_t) log p(x_t | lambda_s) under the model that was
  /// accumulated against.
  double objective() const { return objective_; }
  const std::vector<GmmAccumulator> &states() const { return states_; }

 private:
  std::vector<GmmAccumulator> states_;
  double objective_ = 0.0;
};

/// M-step: weights, means and variances from the accumulated statistics
/// (variances floored). States whose total count is below 1e-8 are left
/// unchanged and reported through `empty_states`.
Pgmm PgmmEmUpdate(const Pgmm &pgmm, const PgmmEmAccumulator &acc, std::vector<int> *empty_states = nullptr);

/// One full EM iteration over a list of utterances.
Pgmm PgmmEmStep(const Pgmm &pgmm, const std::vector<AlignmentMatrix> &alignments,
                const std::vector<FeatureSequence> &feats, double *objective = nullptr);

/// gamma_{s,c,t} = P(s | x_t) P(c | x_t, lambda_s) over the model's states.
/// Alignment columns of states the model does not cover (silence) are
/// discarded. Entries below `prune` are dropped.
MixturePosteriors ComputeMixturePosteriors(const Pgmm &model, const AlignmentMatrix &align,
                                           const FeatureSequence &feats, double prune = 1e-6);
MixturePosteriors ComputeMixturePosteriors(const HmmSet &model, const AlignmentMatrix &align,
                                           const FeatureSequence &feats, double prune = 1e-6);
/// Component posteriors of a single-state UBM (every frame has mass 1).
MixturePosteriors UbmMixturePosteriors(const Pgmm &ubm, const FeatureSequence &feats, double prune = 1e-6);

/// Centered Baum-Welch statistics per mixture:
///   N = sum_t gamma,  F = sum_t gamma (x - mu),  S = sum_t gamma (x - mu)^2.
struct SuffStats {
  Vector occupancy;  // M
  Matrix first;      // M x D
  Matrix second;     // M x D, diagonal of the centered second order
  std::string background_id;

  int NumMixtures() const { return static_cast<int>(occupancy.size()); }
  int Dim() const { return static_cast<int>(first.cols()); }
  static SuffStats Zero(int num_mixtures, int dim);
  void Add(const SuffStats &other);
};

SuffStats AccumulateStats(const MixturePosteriors &gammas, const FeatureSequence &feats, const Matrix &means);

}  // namespace dpsv

#endif  // DPSV_PGMM_H_
