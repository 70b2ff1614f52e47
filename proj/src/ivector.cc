// src/ivector.cc

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

#include "dpsv/ivector.h"

#include <map>
#include <random>

namespace dpsv {

namespace {

double LogDet(const Eigen::LLT<Eigen::MatrixXd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double LogGaussian(const Vector &x, const Vector &mean, const Matrix &cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) Fail(ErrorCode::kDegenerateData, "covariance is not positive definite");
  Vector z = llt.matrixL().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + LogDet(llt) + z.squaredNorm());
}

void CheckStats(const TvModel &tv, const SuffStats &stats) {
  if (stats.NumMixtures() != tv.NumMixtures() || stats.Dim() != tv.Dim())
    Fail(ErrorCode::kShapeMismatch, "statistics ", stats.NumMixtures(), "x", stats.Dim(), " vs extractor ",
         tv.NumMixtures(), "x", tv.Dim());
}

// Row-major flattening of M x D statistics matches the row blocks of T.
Eigen::Map<const Vector> Flat(const Matrix &m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

// Per-mixture T_m' S_m^-1 T_m.
std::vector<Matrix> PrecisionProducts(const TvModel &tv) {
  const int dim = tv.Dim();
  std::vector<Matrix> out(tv.NumMixtures());
  for (int m = 0; m < tv.NumMixtures(); m++) {
    Matrix block = tv.t.middleRows(static_cast<Eigen::Index>(m) * dim, dim);
    Matrix scaled = tv.variances.row(m).transpose().cwiseInverse().asDiagonal() * block;
    out[m] = block.transpose() * scaled;
  }
  return out;
}

struct Posterior {
  Vector mean;
  Matrix cov;
  double objective = 0.0;
};

Posterior LatentPosterior(const TvModel &tv, const std::vector<Matrix> &products, const Vector &inv_var_flat,
                          const SuffStats &stats) {
  const int rank = tv.Rank();
  Matrix precision = Matrix::Identity(rank, rank);
  for (int m = 0; m < tv.NumMixtures(); m++)
    if (stats.occupancy(m) != 0.0) precision += stats.occupancy(m) * products[m];
  Vector b = tv.t.transpose() * inv_var_flat.cwiseProduct(Flat(stats.first));
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  Posterior out;
  out.mean = llt.solve(b);
  out.cov = llt.solve(Eigen::MatrixXd::Identity(rank, rank));
  out.objective = 0.5 * b.dot(out.mean) - 0.5 * LogDet(llt);
  return out;
}

}  // namespace

void TvModel::Check() const {
  if (t.cols() < 1) Fail(ErrorCode::kShapeMismatch, "subspace rank must be at least 1");
  if (means.rows() != variances.rows() || means.cols() != variances.cols() || t.rows() != means.size())
    Fail(ErrorCode::kShapeMismatch, "subspace matrix does not match the background shape");
  if (!t.allFinite()) Fail(ErrorCode::kDegenerateData, "subspace matrix has non-finite entries");
  if ((variances.array() <= 0).any()) Fail(ErrorCode::kDegenerateData, "background variances must be positive");
}

TvModel InitTv(const Pgmm &background, const TvTrainConfig &cfg) {
  if (cfg.rank < 1) Fail(ErrorCode::kConfigInvalid, "rank must be at least 1");
  TvModel tv;
  tv.means = background.Means();
  tv.variances = background.Variances();
  tv.background_id = background.Fingerprint();
  if (cfg.rank > tv.means.size()) Fail(ErrorCode::kRankTooLarge, "rank ", cfg.rank, " exceeds supervector size");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  tv.t.resize(tv.means.size(), cfg.rank);
  for (Eigen::Index i = 0; i < tv.t.rows(); i++)
    for (Eigen::Index j = 0; j < tv.t.cols(); j++) tv.t(i, j) = cfg.init_scale * normal(rng);
  return tv;
}

double TvObjective(const TvModel &tv, const std::vector<SuffStats> &stats) {
  std::vector<Matrix> products = PrecisionProducts(tv);
  Vector inv_var = Flat(tv.variances).cwiseInverse();
  double total = 0.0;
  for (const SuffStats &s : stats) {
    CheckStats(tv, s);
    total += LatentPosterior(tv, products, inv_var, s).objective;
  }
  return total;
}

TvModel TrainTv(const Pgmm &background, const std::vector<SuffStats> &stats, const TvTrainConfig &cfg,
                std::vector<double> *objective) {
  if (static_cast<int>(stats.size()) < cfg.rank)
    Fail(ErrorCode::kRankTooLarge, "rank ", cfg.rank, " needs at least as many utterances, got ", stats.size());
  std::string id = background.Fingerprint();
  for (size_t u = 0; u < stats.size(); u++)
    if (stats[u].background_id != id)
      Fail(ErrorCode::kInconsistentBackground, "statistics ", u, " were computed against another background");
  TvModel tv = InitTv(background, cfg);
  const int rank = tv.Rank(), dim = tv.Dim(), mixtures = tv.NumMixtures();
  for (const SuffStats &s : stats) CheckStats(tv, s);
  Vector inv_var = Flat(tv.variances).cwiseInverse();
  if (objective) objective->clear();

  for (int iter = 0; iter <= cfg.iterations; iter++) {
    std::vector<Matrix> products = PrecisionProducts(tv);
    Matrix c = Matrix::Zero(tv.t.rows(), rank);
    std::vector<Matrix> a(mixtures, Matrix::Zero(rank, rank));
    double total = 0.0;
    for (const SuffStats &s : stats) {
      Posterior post = LatentPosterior(tv, products, inv_var, s);
      total += post.objective;
      if (iter == cfg.iterations) continue;
      Matrix second = post.cov + post.mean * post.mean.transpose();
      c.noalias() += Flat(s.first) * post.mean.transpose();
      for (int m = 0; m < mixtures; m++)
        if (s.occupancy(m) != 0.0) a[m] += s.occupancy(m) * second;
    }
    if (objective) objective->push_back(total);
    if (iter == cfg.iterations) break;
    for (int m = 0; m < mixtures; m++) {
      if (a[m].trace() < 1e-10) continue;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a[m]);
      Matrix rhs = c.middleRows(static_cast<Eigen::Index>(m) * dim, dim).transpose();
      tv.t.middleRows(static_cast<Eigen::Index>(m) * dim, dim) = ldlt.solve(rhs).transpose();
    }
  }
  return tv;
}

IVector ExtractIvector(const SuffStats &stats, const TvModel &tv) {
  CheckStats(tv, stats);
  if (!stats.background_id.empty() && !tv.background_id.empty() && stats.background_id != tv.background_id)
    Fail(ErrorCode::kInconsistentBackground, "statistics and extractor use different background models");
  std::vector<Matrix> products = PrecisionProducts(tv);
  IVector out;
  out.value = LatentPosterior(tv, products, Flat(tv.variances).cwiseInverse(), stats).mean;
  return out;
}

IVector LengthNormalize(const IVector &v) {
  double norm = v.value.norm();
  if (!(norm > 0.0)) Fail(ErrorCode::kZeroVector, "cannot length-normalize a zero vector");
  IVector out = v;
  out.value /= norm;
  out.normalized = true;
  return out;
}

void PldaBackend::Check() const {
  if (lda.rows() < 1 || lda.cols() != mean.size())
    Fail(ErrorCode::kShapeMismatch, "LDA projection does not match the i-vector mean");
  const Eigen::Index d = lda.rows();
  if (plda_mean.size() != d || between.rows() != d || between.cols() != d || within.rows() != d ||
      within.cols() != d)
    Fail(ErrorCode::kShapeMismatch, "PLDA parameters do not match the LDA dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(within);
  if (llt.info() != Eigen::Success) Fail(ErrorCode::kDegenerateData, "within-speaker covariance is not positive definite");
}

double PldaLogLikelihood(const Vector &mean, const Matrix &between, const Matrix &within,
                         const std::vector<std::vector<Vector>> &groups) {
  const double d = static_cast<double>(mean.size());
  Eigen::LLT<Eigen::MatrixXd> within_llt(within);
  if (within_llt.info() != Eigen::Success) Fail(ErrorCode::kDegenerateData, "within covariance not positive definite");
  const double log_det_w = LogDet(within_llt);
  double total = 0.0;
  for (const auto &group : groups) {
    const double n = static_cast<double>(group.size());
    Vector avg = Vector::Zero(mean.size());
    for (const Vector &x : group) avg += x;
    avg /= n;
    double scatter = 0.0;
    for (const Vector &x : group) {
      Vector diff = x - avg;
      scatter += diff.dot(within_llt.solve(diff));
    }
    total += -0.5 * (n - 1) * d * kLog2Pi - 0.5 * (n - 1) * log_det_w - 0.5 * scatter - 0.5 * d * std::log(n) +
             LogGaussian(avg, mean, between + within / n);
  }
  return total;
}

PldaBackend TrainBackend(const std::vector<IVector> &ivectors, const std::vector<std::string> &speakers,
                         const BackendConfig &cfg, std::vector<double> *objective) {
  if (ivectors.size() != speakers.size())
    Fail(ErrorCode::kShapeMismatch, ivectors.size(), " i-vectors but ", speakers.size(), " speaker labels");
  if (ivectors.empty()) Fail(ErrorCode::kInsufficientSpeakers, "no training i-vectors");
  const Eigen::Index rank = ivectors[0].value.size();
  std::map<std::string, std::vector<int>> by_speaker;
  for (size_t i = 0; i < ivectors.size(); i++) {
    if (ivectors[i].value.size() != rank) Fail(ErrorCode::kDimMismatch, "i-vector ", i, " has a different rank");
    by_speaker[speakers[i]].push_back(static_cast<int>(i));
  }
  if (by_speaker.size() < 2) Fail(ErrorCode::kInsufficientSpeakers, "need at least 2 speakers, got ", by_speaker.size());
  for (const auto &[spk, idx] : by_speaker)
    if (idx.size() < 2) Fail(ErrorCode::kInsufficientSpeakers, "speaker ", spk, " has only ", idx.size(), " i-vector");
  const int num_speakers = static_cast<int>(by_speaker.size());
  if (cfg.lda_dim < 1 || cfg.lda_dim > std::min<int>(static_cast<int>(rank), num_speakers - 1))
    Fail(ErrorCode::kBadLdaDim, "LDA dimension ", cfg.lda_dim, " must lie in [1, ", std::min<int>(rank, num_speakers - 1),
         "]");

  const double total_n = static_cast<double>(ivectors.size());
  PldaBackend out;
  out.mean = Vector::Zero(rank);
  for (const IVector &v : ivectors) out.mean += v.value;
  out.mean /= total_n;
  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(rank, rank), sb = Eigen::MatrixXd::Zero(rank, rank);
  for (const auto &[spk, idx] : by_speaker) {
    Vector spk_mean = Vector::Zero(rank);
    for (int i : idx) spk_mean += ivectors[i].value;
    spk_mean /= static_cast<double>(idx.size());
    for (int i : idx) {
      Vector diff = ivectors[i].value - spk_mean;
      sw += diff * diff.transpose();
    }
    Vector diff = spk_mean - out.mean;
    sb += static_cast<double>(idx.size()) * diff * diff.transpose();
  }
  sw /= total_n;
  sb /= total_n;
  // A multiple of the total covariance keeps the problem well posed while
  // transforming with the data under any invertible pre-transform.
  Eigen::MatrixXd reg = sw + 1e-6 * (sw + sb);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(sb, reg);
  if (eig.info() != Eigen::Success) Fail(ErrorCode::kDegenerateData, "LDA eigen-decomposition failed");
  out.lda.resize(cfg.lda_dim, rank);
  for (int k = 0; k < cfg.lda_dim; k++) {
    Vector v = eig.eigenvectors().col(rank - 1 - k);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.lda.row(k) = v.transpose();
  }

  std::vector<std::vector<Vector>> groups;
  const int d = cfg.lda_dim;
  for (const auto &[spk, idx] : by_speaker) {
    groups.emplace_back();
    for (int i : idx) {
      Vector y = out.lda * (ivectors[i].value - out.mean);
      double norm = y.norm();
      if (!(norm > 0.0)) Fail(ErrorCode::kZeroVector, "projected i-vector ", ivectors[i].id, " is zero");
      groups.back().push_back(y / norm);
    }
  }

  // Initialization from the empirical within/between scatter.
  Vector m = Vector::Zero(d);
  for (const auto &g : groups)
    for (const Vector &y : g) m += y;
  m /= total_n;
  Matrix w = Matrix::Zero(d, d), b = Matrix::Zero(d, d);
  for (const auto &g : groups) {
    Vector gm = Vector::Zero(d);
    for (const Vector &y : g) gm += y;
    gm /= static_cast<double>(g.size());
    for (const Vector &y : g) w += (y - gm) * (y - gm).transpose();
    b += (gm - m) * (gm - m).transpose();
  }
  w /= total_n;
  b /= static_cast<double>(num_speakers);
  const Matrix ridge = 1e-6 * (w.trace() / d) * Matrix::Identity(d, d);
  w += ridge;
  b += ridge;

  if (objective) objective->clear();
  for (int iter = 0; iter <= cfg.plda_iterations; iter++) {
    if (objective) objective->push_back(PldaLogLikelihood(m, b, w, groups));
    if (iter == cfg.plda_iterations) break;
    Eigen::MatrixXd b_inv = Eigen::LLT<Eigen::MatrixXd>(b).solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::MatrixXd w_inv = Eigen::LLT<Eigen::MatrixXd>(w).solve(Eigen::MatrixXd::Identity(d, d));
    std::vector<Vector> y_mean;
    std::vector<Matrix> y_cov;
    for (const auto &g : groups) {
      Vector sum = Vector::Zero(d);
      for (const Vector &y : g) sum += y;
      Eigen::MatrixXd precision = b_inv + static_cast<double>(g.size()) * w_inv;
      Eigen::LLT<Eigen::MatrixXd> llt(precision);
      y_cov.push_back(llt.solve(Eigen::MatrixXd::Identity(d, d)));
      y_mean.push_back(llt.solve(b_inv * m + w_inv * sum));
    }
    Vector new_m = Vector::Zero(d);
    for (const Vector &y : y_mean) new_m += y;
    new_m /= static_cast<double>(num_speakers);
    Matrix new_b = Matrix::Zero(d, d), new_w = Matrix::Zero(d, d);
    for (size_t i = 0; i < groups.size(); i++) {
      new_b += y_cov[i] + (y_mean[i] - new_m) * (y_mean[i] - new_m).transpose();
      for (const Vector &y : groups[i])
        new_w += y_cov[i] + (y - y_mean[i]) * (y - y_mean[i]).transpose();
    }
    m = new_m;
    b = new_b / static_cast<double>(num_speakers);
    w = new_w / total_n;
  }
  out.plda_mean = m;
  out.between = b;
  out.within = w;
  return out;
}

Vector ProjectIvector(const PldaBackend &backend, const Vector &raw) {
  if (raw.size() != backend.InputDim())
    Fail(ErrorCode::kShapeMismatch, "i-vector of rank ", raw.size(), " vs backend input ", backend.InputDim());
  Vector y = backend.lda * (raw - backend.mean);
  double norm = y.norm();
  if (!(norm > 0.0)) Fail(ErrorCode::kZeroVector, "projected i-vector is zero");
  return y / norm;
}

double PldaScore(const PldaBackend &backend, const std::vector<Vector> &enroll, const Vector &test) {
  if (enroll.empty()) Fail(ErrorCode::kEmptyEnrollment, "no enrollment i-vectors");
  const Eigen::Index d = backend.OutputDim();
  Vector e = Vector::Zero(d);
  for (const Vector &v : enroll) {
    if (v.size() != d) Fail(ErrorCode::kShapeMismatch, "enrollment vector has dimension ", v.size());
    e += v;
  }
  if (test.size() != d) Fail(ErrorCode::kShapeMismatch, "test vector has dimension ", test.size());
  double norm = e.norm();
  if (!(norm > 0.0)) Fail(ErrorCode::kZeroVector, "averaged enrollment vector is zero");
  e /= norm;
  Matrix total = backend.between + backend.within;
  Matrix joint(2 * d, 2 * d);
  joint << total, backend.between, backend.between, total;
  Vector stacked(2 * d), joint_mean(2 * d);
  stacked << e, test;
  joint_mean << backend.plda_mean, backend.plda_mean;
  return LogGaussian(stacked, joint_mean, joint) - LogGaussian(e, backend.plda_mean, total) -
         LogGaussian(test, backend.plda_mean, total);
}

}  // namespace dpsv
