// dpsv/diag-gmm.h

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

#ifndef DPSV_DIAG_GMM_H_
#define DPSV_DIAG_GMM_H_

#include <cstdint>
#include <vector>

#include "dpsv/base.h"

namespace dpsv {

/// Diagonal-covariance Gaussian mixture. Parameters are immutable once
/// constructed; the normalizers used for likelihood evaluation are cached.
class DiagGmm {
 public:
  DiagGmm() = default;
  /// Validates weights (sum to 1 within 1e-9, nonnegative) and variances (> 0).
  DiagGmm(Vector weights, Matrix means, Matrix variances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }

  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }
  const Matrix &variances() const { return variances_; }

  /// log(w_c) + log N(x; mu_c, Sigma_c) for every component.
  Vector ComponentLogLikes(const Eigen::Ref<const Vector> &frame) const;
  /// Same for a block of frames (T x C), via two matrix products.
  Matrix ComponentLogLikes(const Matrix &frames) const;

  double LogLikelihood(const Eigen::Ref<const Vector> &frame) const;
  Vector LogLikelihoods(const Matrix &frames) const;

  /// P(c | x), normalized in the log domain with max subtraction.
  Vector ComponentPosteriors(const Eigen::Ref<const Vector> &frame) const;

 private:
  void CheckFrame(Eigen::Index dim) const;

  Vector weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_vars_;          // C x D
  Matrix means_inv_vars_;    // C x D
  Vector gconsts_;           // log w - 0.5 (D log 2pi + sum log var + sum mu^2/var)
};

/// Doubles the component count: each component becomes a pair offset by
/// +-0.2 standard deviations along every dimension, each with half the weight.
/// Component c maps to 2c (+) and 2c+1 (-).
DiagGmm SplitComponents(const DiagGmm &gmm);

/// Single Gaussian fit by weighted sample mean and variance.
DiagGmm FitSingleGaussian(const Matrix &data, const Vector *frame_weights,
                          const Vector &variance_floor);

struct GmmTrainConfig {
  int target_components = 512;
  int em_iterations = 10;
  double variance_floor = 1e-3;  // fraction of the global per-dim variance
  std::uint64_t seed = 0;
  // When > 0 and the data has more rows, train on a seeded random subset.
  int max_frames = 0;
};

/// Zeroth/first/second order accumulators for one EM pass. Accumulators from
/// different data shards can be merged with Add.
class GmmAccumulator {
 public:
  GmmAccumulator(int num_components, int dim);

  /// Adds `weight` x the component posteriors of `frame`. Returns the
  /// weighted frame log-likelihood.
  double Accumulate(const DiagGmm &gmm, const Eigen::Ref<const Vector> &frame, double weight = 1.0);
  /// Block version; `frame_weights` may be null for unit weights.
  /// Optionally returns the unweighted per-frame log-likelihoods.
  double AccumulateBlock(const DiagGmm &gmm, const Matrix &frames, const Vector *frame_weights,
                         Vector *frame_loglikes = nullptr);
  void Add(const GmmAccumulator &other);

  double TotalCount() const { return occupancy_.sum(); }
  const Vector &occupancy() const { return occupancy_; }

  /// M-step. Components with occupancy below 1e-8 are re-seeded at
  /// `reseed_frame` (typically the worst-modelled frame); when no frame is
  /// given the old parameters are kept.
  DiagGmm Update(const DiagGmm &old, const Vector &variance_floor,
                 const Vector *reseed_frame = nullptr, int *num_reseeded = nullptr) const;

 private:
  Vector occupancy_;
  Matrix first_;
  Matrix second_;
};

struct GmmTrainTrace {
  struct Entry {
    int num_components;
    int iteration;
    double log_likelihood;  // total data log-likelihood before the M-step
  };
  std::vector<Entry> entries;
  int num_reseeded = 0;
};

/// Global per-dimension variance times `fraction`.
Vector VarianceFloor(const Matrix &data, double fraction);

/// Grows a mixture from one Gaussian by repeated split + EM up to
/// cfg.target_components (a power of two).
DiagGmm TrainEm(const Matrix &data, const GmmTrainConfig &cfg, GmmTrainTrace *trace = nullptr);

/// Same, with an explicit absolute variance floor (shared across models).
DiagGmm TrainEm(const Matrix &data, const GmmTrainConfig &cfg, const Vector &variance_floor,
                GmmTrainTrace *trace = nullptr);

/// Runs `iterations` EM passes from `init` on fixed data.
DiagGmm RunEm(const DiagGmm &init, const Matrix &data, const Vector *frame_weights,
              int iterations, const Vector &variance_floor, GmmTrainTrace *trace = nullptr);

}  // namespace dpsv

#endif  // DPSV_DIAG_GMM_H_
