// src/diag-gmm.cc

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

#include "dpsv/diag-gmm.h"

#include <algorithm>
#include <numeric>
#include <random>

namespace dpsv {

DiagGmm::DiagGmm(Vector weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  const Eigen::Index num_comp = weights_.size();
  if (num_comp < 1 || means_.rows() != num_comp || variances_.rows() != num_comp ||
      means_.cols() != variances_.cols() || means_.cols() < 1)
    Fail(ErrorCode::kShapeMismatch, "inconsistent GMM parameter shapes");
  if ((weights_.array() < 0).any() || std::abs(weights_.sum() - 1.0) > 1e-9)
    Fail(ErrorCode::kConfigInvalid, "GMM weights must be nonnegative and sum to 1, sum is ",
         weights_.sum());
  if (!(variances_.array() > 0).all() || !variances_.allFinite() || !means_.allFinite())
    Fail(ErrorCode::kConfigInvalid, "GMM variances must be positive and finite");
  inv_vars_ = variances_.cwiseInverse();
  means_inv_vars_ = means_.cwiseProduct(inv_vars_);
  gconsts_.resize(num_comp);
  const double dim = static_cast<double>(means_.cols());
  for (Eigen::Index c = 0; c < num_comp; c++) {
    gconsts_(c) = std::log(weights_(c)) -
                  0.5 * (dim * kLog2Pi + variances_.row(c).array().log().sum() +
                         means_.row(c).cwiseProduct(means_inv_vars_.row(c)).sum());
  }
}

void DiagGmm::CheckFrame(Eigen::Index dim) const {
  if (dim != means_.cols())
    Fail(ErrorCode::kDimMismatch, "frame dim ", dim, " vs model dim ", means_.cols());
}

Vector DiagGmm::ComponentLogLikes(const Eigen::Ref<const Vector> &frame) const {
  CheckFrame(frame.size());
  Vector out(NumComponents());
  for (int c = 0; c < NumComponents(); c++) {
    double quad = ((frame.transpose() - means_.row(c)).array().square() * inv_vars_.row(c).array()).sum();
    out(c) = std::log(weights_(c)) -
             0.5 * (Dim() * kLog2Pi + variances_.row(c).array().log().sum() + quad);
  }
  return out;
}

Matrix DiagGmm::ComponentLogLikes(const Matrix &frames) const {
  CheckFrame(frames.cols());
  Matrix out = frames * means_inv_vars_.transpose() -
               0.5 * frames.cwiseAbs2() * inv_vars_.transpose();
  out.rowwise() += gconsts_.transpose();
  return out;
}

double DiagGmm::LogLikelihood(const Eigen::Ref<const Vector> &frame) const {
  return LogSumExp(ComponentLogLikes(frame));
}

Vector DiagGmm::LogLikelihoods(const Matrix &frames) const {
  Matrix ll = ComponentLogLikes(frames);
  Vector out(ll.rows());
  for (Eigen::Index t = 0; t < ll.rows(); t++) out(t) = LogSumExp(ll.row(t).transpose());
  return out;
}

Vector DiagGmm::ComponentPosteriors(const Eigen::Ref<const Vector> &frame) const {
  Vector ll = ComponentLogLikes(frame);
  double max = ll.maxCoeff();
  Vector post = (ll.array() - max).exp();
  return post / post.sum();
}

DiagGmm SplitComponents(const DiagGmm &gmm) {
  const int num_comp = gmm.NumComponents(), dim = gmm.Dim();
  Vector weights(2 * num_comp);
  Matrix means(2 * num_comp, dim), vars(2 * num_comp, dim);
  for (int c = 0; c < num_comp; c++) {
    Eigen::RowVectorXd offset = 0.2 * gmm.variances().row(c).cwiseSqrt();
    for (int k = 0; k < 2; k++) {
      weights(2 * c + k) = 0.5 * gmm.weights()(c);
      means.row(2 * c + k) = gmm.means().row(c) + (k == 0 ? offset : -offset);
      vars.row(2 * c + k) = gmm.variances().row(c);
    }
  }
  weights /= weights.sum();
  return DiagGmm(std::move(weights), std::move(means), std::move(vars));
}

DiagGmm FitSingleGaussian(const Matrix &data, const Vector *frame_weights,
                          const Vector &variance_floor) {
  Vector w = frame_weights ? *frame_weights : Vector::Ones(data.rows());
  double total = w.sum();
  if (total <= 0) Fail(ErrorCode::kTooFewSamples, "no data mass to fit a Gaussian");
  Eigen::RowVectorXd mean = (w.transpose() * data) / total;
  Eigen::RowVectorXd var = (w.transpose() * data.cwiseAbs2()) / total - mean.cwiseAbs2();
  var = var.cwiseMax(variance_floor.transpose());
  return DiagGmm(Vector::Ones(1), Matrix(mean), Matrix(var));
}

GmmAccumulator::GmmAccumulator(int num_components, int dim)
    : occupancy_(Vector::Zero(num_components)),
      first_(Matrix::Zero(num_components, dim)),
      second_(Matrix::Zero(num_components, dim)) {}

double GmmAccumulator::Accumulate(const DiagGmm &gmm, const Eigen::Ref<const Vector> &frame,
                                  double weight) {
  Vector ll = gmm.ComponentLogLikes(frame);
  double total = LogSumExp(ll);
  if (weight == 0.0) return 0.0;
  Vector post = (ll.array() - total).exp() * weight;
  occupancy_ += post;
  first_ += post * frame.transpose();
  second_ += post * frame.cwiseAbs2().transpose();
  return weight * total;
}

double GmmAccumulator::AccumulateBlock(const DiagGmm &gmm, const Matrix &frames,
                                       const Vector *frame_weights, Vector *frame_loglikes) {
  Matrix ll = gmm.ComponentLogLikes(frames);
  const Eigen::Index num_frames = frames.rows();
  Vector totals(num_frames);
  double weighted = 0.0;
  for (Eigen::Index t = 0; t < num_frames; t++) {
    double tot = LogSumExp(ll.row(t).transpose());
    totals(t) = tot;
    double w = frame_weights ? (*frame_weights)(t) : 1.0;
    ll.row(t) = ((ll.row(t).array() - tot).exp() * w).matrix();
    if (w != 0.0) weighted += w * tot;
  }
  // ll now holds weighted posteriors.
  occupancy_ += ll.colwise().sum().transpose();
  first_ += ll.transpose() * frames;
  second_ += ll.transpose() * frames.cwiseAbs2();
  if (frame_loglikes) *frame_loglikes = std::move(totals);
  return weighted;
}

void GmmAccumulator::Add(const GmmAccumulator &other) {
  occupancy_ += other.occupancy_;
  first_ += other.first_;
  second_ += other.second_;
}

DiagGmm GmmAccumulator::Update(const DiagGmm &old, const Vector &variance_floor,
                               const Vector *reseed_frame, int *num_reseeded) const {
  const int num_comp = old.NumComponents(), dim = old.Dim();
  const double total = occupancy_.sum();
  if (total <= 0) return old;
  Vector weights(num_comp);
  Matrix means(num_comp, dim), vars(num_comp, dim);
  int reseeded = 0;
  for (int c = 0; c < num_comp; c++) {
    double n = occupancy_(c);
    if (n < 1e-8) {
      if (reseed_frame) {
        // Keep C fixed: restart the component at the worst-modelled frame
        // with the old variance and a small weight.
        weights(c) = 1.0 / (num_comp * 100.0);
        means.row(c) = reseed_frame->transpose();
        vars.row(c) = old.variances().row(c);
        reseeded++;
      } else {
        weights(c) = std::max(n / total, 1e-12);
        means.row(c) = old.means().row(c);
        vars.row(c) = old.variances().row(c);
      }
      continue;
    }
    weights(c) = n / total;
    means.row(c) = first_.row(c) / n;
    vars.row(c) = (second_.row(c) / n - means.row(c).cwiseAbs2()).cwiseMax(variance_floor.transpose());
  }
  if (num_reseeded) *num_reseeded += reseeded;
  weights /= weights.sum();
  return DiagGmm(std::move(weights), std::move(means), std::move(vars));
}

Vector VarianceFloor(const Matrix &data, double fraction) {
  if (data.rows() < 2) Fail(ErrorCode::kTooFewSamples, "need at least 2 frames for a variance floor");
  Eigen::RowVectorXd mean = data.colwise().mean();
  Vector var = ((data.rowwise() - mean).cwiseAbs2().colwise().sum() / data.rows()).transpose();
  double max_var = var.maxCoeff();
  if (!(max_var > 0)) Fail(ErrorCode::kDegenerateData, "global variance is zero in every dimension");
  // Constant dimensions (e.g. zeroed by CMVN) borrow the average variance.
  double mean_var = var.mean();
  for (Eigen::Index d = 0; d < var.size(); d++)
    if (!(var(d) > 0)) var(d) = mean_var;
  return var * fraction;
}

DiagGmm RunEm(const DiagGmm &init, const Matrix &data, const Vector *frame_weights,
              int iterations, const Vector &variance_floor, GmmTrainTrace *trace) {
  DiagGmm gmm = init;
  for (int it = 0; it < iterations; it++) {
    GmmAccumulator acc(gmm.NumComponents(), gmm.Dim());
    Vector frame_ll;
    double ll = acc.AccumulateBlock(gmm, data, frame_weights, &frame_ll);
    if (trace) trace->entries.push_back({gmm.NumComponents(), it, ll});
    Vector worst;
    if ((acc.occupancy().array() < 1e-8).any()) {
      Eigen::Index idx = 0;
      if (frame_weights) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < frame_ll.size(); t++)
          if ((*frame_weights)(t) > 0 && frame_ll(t) < best) best = frame_ll(t), idx = t;
      } else {
        frame_ll.minCoeff(&idx);
      }
      worst = data.row(idx).transpose();
    }
    gmm = acc.Update(gmm, variance_floor, worst.size() ? &worst : nullptr,
                     trace ? &trace->num_reseeded : nullptr);
  }
  if (trace && iterations > 0) {
    Vector ll = gmm.LogLikelihoods(data);
    double total = frame_weights ? frame_weights->dot(ll) : ll.sum();
    trace->entries.push_back({gmm.NumComponents(), iterations, total});
  }
  return gmm;
}

DiagGmm TrainEm(const Matrix &data, const GmmTrainConfig &cfg, GmmTrainTrace *trace) {
  if (data.rows() < 2) Fail(ErrorCode::kTooFewSamples, "need at least 2 frames, got ", data.rows());
  return TrainEm(data, cfg, VarianceFloor(data, cfg.variance_floor), trace);
}

DiagGmm TrainEm(const Matrix &data, const GmmTrainConfig &cfg, const Vector &variance_floor,
                GmmTrainTrace *trace) {
  const int target = cfg.target_components;
  if (target < 1 || (target & (target - 1)) != 0)
    Fail(ErrorCode::kConfigInvalid, "target_components must be a power of two, got ", target);
  if (data.cols() < 1) Fail(ErrorCode::kDimMismatch, "zero-dimensional data");
  if (data.rows() < target)
    Fail(ErrorCode::kTooFewSamples, data.rows(), " frames for ", target, " components");

  const Matrix *train = &data;
  Matrix subset;
  if (cfg.max_frames > 0 && data.rows() > cfg.max_frames) {
    std::vector<Eigen::Index> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(cfg.max_frames);
    std::sort(order.begin(), order.end());
    subset.resize(cfg.max_frames, data.cols());
    for (int i = 0; i < cfg.max_frames; i++) subset.row(i) = data.row(order[i]);
    train = &subset;
  }

  DiagGmm gmm = FitSingleGaussian(*train, nullptr, variance_floor);
  while (gmm.NumComponents() < target) {
    gmm = RunEm(SplitComponents(gmm), *train, nullptr, cfg.em_iterations, variance_floor, trace);
  }
  return gmm;
}

}  // namespace dpsv
