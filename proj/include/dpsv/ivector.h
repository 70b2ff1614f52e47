// dpsv/ivector.h

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

#ifndef DPSV_IVECTOR_H_
#define DPSV_IVECTOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpsv/pgmm.h"

namespace dpsv {

/// Total variability model anchored to one background model. Row block
/// m*D .. m*D+D-1 of `t` belongs to mixture m.
struct TvModel {
  Matrix t;          // (M*D) x R
  Matrix means;      // M x D, background means
  Matrix variances;  // M x D, background variances
  std::string background_id;

  int Rank() const { return static_cast<int>(t.cols()); }
  int NumMixtures() const { return static_cast<int>(means.rows()); }
  int Dim() const { return static_cast<int>(means.cols()); }
  void Check() const;
};

struct IVector {
  std::string id;
  Vector value;
  bool normalized = false;
};

struct TvTrainConfig {
  int rank = 20;
  int iterations = 5;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// T initialized with seeded N(0,1) entries times `init_scale`.
TvModel InitTv(const Pgmm &background, const TvTrainConfig &cfg);

/// Per-utterance log-likelihood of the first-order statistics, dropping
/// terms that do not depend on T: 1/2 b' L^-1 b - 1/2 log|L|.
double TvObjective(const TvModel &tv, const std::vector<SuffStats> &stats);

/// EM for T. `objective` receives the value before each iteration and after
/// the last one (iterations + 1 entries).
TvModel TrainTv(const Pgmm &background, const std::vector<SuffStats> &stats, const TvTrainConfig &cfg,
                std::vector<double> *objective = nullptr);

/// Posterior mean of the latent factor:
/// (I + sum_m N_m T_m' S_m^-1 T_m) w = sum_m T_m' S_m^-1 F_m.
IVector ExtractIvector(const SuffStats &stats, const TvModel &tv);

IVector LengthNormalize(const IVector &v);

/// Centering, LDA, length normalization and two-covariance PLDA.
struct PldaBackend {
  Vector mean;     // global mean of the raw i-vectors
  Matrix lda;      // R' x R
  Vector plda_mean;
  Matrix between;  // R' x R'
  Matrix within;   // R' x R'

  int InputDim() const { return static_cast<int>(lda.cols()); }
  int OutputDim() const { return static_cast<int>(lda.rows()); }
  void Check() const;
};

struct BackendConfig {
  int lda_dim = 10;
  int plda_iterations = 10;
};

/// `objective` receives the PLDA log-likelihood before each EM iteration and
/// after the last one.
PldaBackend TrainBackend(const std::vector<IVector> &ivectors, const std::vector<std::string> &speakers,
                         const BackendConfig &cfg, std::vector<double> *objective = nullptr);

/// Exact marginal log-likelihood of speaker-grouped data under the
/// two-covariance model.
double PldaLogLikelihood(const Vector &mean, const Matrix &between, const Matrix &within,
                         const std::vector<std::vector<Vector>> &groups);

/// Centering, LDA projection and length normalization.
Vector ProjectIvector(const PldaBackend &backend, const Vector &raw);

/// Same/different speaker log-likelihood ratio. Enrollment vectors
/// (projected) are averaged and re-normalized first.
double PldaScore(const PldaBackend &backend, const std::vector<Vector> &enroll, const Vector &test);

}  // namespace dpsv

#endif  // DPSV_IVECTOR_H_
