// src/pgmm.cc

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

#include "dpsv/pgmm.h"

#include <cstdio>

namespace dpsv {

int Pgmm::NumMixtures() const {
  int total = 0;
  for (const DiagGmm &g : gmms) total += g.NumComponents();
  return total;
}

std::vector<int> Pgmm::MixtureOffsets() const {
  std::vector<int> offsets(gmms.size() + 1, 0);
  for (size_t i = 0; i < gmms.size(); i++) offsets[i + 1] = offsets[i] + gmms[i].NumComponents();
  return offsets;
}

Matrix Pgmm::Means() const {
  Matrix out(NumMixtures(), Dim());
  int row = 0;
  for (const DiagGmm &g : gmms) {
    out.middleRows(row, g.NumComponents()) = g.means();
    row += g.NumComponents();
  }
  return out;
}

Matrix Pgmm::Variances() const {
  Matrix out(NumMixtures(), Dim());
  int row = 0;
  for (const DiagGmm &g : gmms) {
    out.middleRows(row, g.NumComponents()) = g.variances();
    row += g.NumComponents();
  }
  return out;
}

std::string Pgmm::Fingerprint() const {
  std::uint64_t h = Fnv1a(states.data(), states.size() * sizeof(int));
  for (const DiagGmm &g : gmms) {
    h = Fnv1a(g.weights().data(), g.weights().size() * sizeof(double), h);
    h = Fnv1a(g.means().data(), g.means().size() * sizeof(double), h);
    h = Fnv1a(g.variances().data(), g.variances().size() * sizeof(double), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Pgmm::Check() const {
  if (states.empty() || states.size() != gmms.size())
    Fail(ErrorCode::kShapeMismatch, "PGMM needs one GMM per state");
  for (size_t i = 0; i < gmms.size(); i++) {
    if (gmms[i].Dim() != Dim()) Fail(ErrorCode::kDimMismatch, "PGMM state GMMs disagree on dimension");
    if (states[i] != kAllFrames && (states[i] < 0 || states[i] >= kNumStates))
      Fail(ErrorCode::kShapeMismatch, "PGMM state index ", states[i], " out of range");
  }
  if (variance_floor.size() != Dim()) Fail(ErrorCode::kShapeMismatch, "variance floor has wrong size");
}

Pgmm PgmmFromHmmSet(const HmmSet &hmms) {
  hmms.Check();
  Pgmm out;
  for (int s = 0; s < kNumDigitStates; s++) {
    out.states.push_back(s);
    out.gmms.push_back(hmms.states[s].gmm);
  }
  // The HMM floor is not stored; the smallest trained variance is a safe
  // lower bound for any further EM.
  out.variance_floor = Vector::Constant(hmms.Dim(), std::numeric_limits<double>::max());
  for (const HmmState &s : hmms.states)
    out.variance_floor = out.variance_floor.cwiseMin(s.gmm.variances().colwise().minCoeff().transpose());
  return out;
}

Pgmm PgmmFromUbm(const DiagGmm &ubm, const Vector &variance_floor) {
  Pgmm out;
  out.states = {kAllFrames};
  out.gmms = {ubm};
  out.variance_floor = variance_floor;
  return out;
}

namespace {

void CheckPair(const AlignmentMatrix &align, const FeatureSequence &feats) {
  if (align.NumStates() != kNumStates)
    Fail(ErrorCode::kShapeMismatch, "alignment has ", align.NumStates(), " states, expected ", kNumStates);
  if (align.NumFrames() != feats.NumFrames())
    Fail(ErrorCode::kShapeMismatch, "alignment has ", align.NumFrames(), " frames, features have ",
         feats.NumFrames());
}

}  // namespace

Pgmm InitPgmm(const std::vector<AlignmentMatrix> &alignments, const std::vector<FeatureSequence> &feats,
              int num_components, const GmmTrainConfig &gmm_cfg) {
  if (alignments.size() != feats.size() || feats.empty())
    Fail(ErrorCode::kShapeMismatch, "alignment and feature lists must be parallel and non-empty");
  const int dim = feats[0].Dim();
  std::vector<std::vector<std::pair<int, int>>> assigned(kNumDigitStates);
  int total = 0;
  for (size_t u = 0; u < feats.size(); u++) {
    CheckPair(alignments[u], feats[u]);
    if (feats[u].Dim() != dim) Fail(ErrorCode::kDimMismatch, "utterance ", u, " has dim ", feats[u].Dim());
    std::vector<int> hard = ArgmaxStates(alignments[u]);
    for (int t = 0; t < feats[u].NumFrames(); t++)
      if (!IsSilenceState(hard[t])) assigned[hard[t]].push_back({static_cast<int>(u), t});
    total += feats[u].NumFrames();
  }
  for (int s = 0; s < kNumDigitStates; s++)
    if (static_cast<int>(assigned[s].size()) < num_components)
      Fail(ErrorCode::kStarvedState, "state ", s, " has ", assigned[s].size(), " frames for ", num_components,
           " components");

  Matrix all(total, dim);
  int row = 0;
  for (const auto &f : feats) {
    all.middleRows(row, f.NumFrames()) = f.frames;
    row += f.NumFrames();
  }
  Pgmm out;
  out.variance_floor = VarianceFloor(all, gmm_cfg.variance_floor);
  GmmTrainConfig cfg = gmm_cfg;
  cfg.target_components = num_components;
  for (int s = 0; s < kNumDigitStates; s++) {
    Matrix frames(static_cast<Eigen::Index>(assigned[s].size()), dim);
    for (size_t i = 0; i < assigned[s].size(); i++)
      frames.row(static_cast<Eigen::Index>(i)) = feats[assigned[s][i].first].frames.row(assigned[s][i].second);
    out.states.push_back(s);
    out.gmms.push_back(TrainEm(frames, cfg, out.variance_floor));
  }
  return out;
}

PgmmEmAccumulator::PgmmEmAccumulator(const Pgmm &pgmm) {
  for (const DiagGmm &g : pgmm.gmms) states_.emplace_back(g.NumComponents(), g.Dim());
}

void PgmmEmAccumulator::Accumulate(const Pgmm &pgmm, const AlignmentMatrix &align, const FeatureSequence &feats) {
  if (!pgmm.IsUbm()) CheckPair(align, feats);
  if (feats.Dim() != pgmm.Dim()) Fail(ErrorCode::kDimMismatch, "features dim ", feats.Dim(), " vs model ", pgmm.Dim());
  for (int i = 0; i < pgmm.NumStates(); i++) {
    if (pgmm.states[i] == kAllFrames) {
      objective_ += states_[i].AccumulateBlock(pgmm.gmms[i], feats.frames, nullptr);
    } else {
      Vector w = align.posteriors.col(pgmm.states[i]);
      if (w.sum() <= 0.0) continue;
      objective_ += states_[i].AccumulateBlock(pgmm.gmms[i], feats.frames, &w);
    }
  }
}

void PgmmEmAccumulator::Add(const PgmmEmAccumulator &other) {
  for (size_t i = 0; i < states_.size(); i++) states_[i].Add(other.states_[i]);
  objective_ += other.objective_;
}

Pgmm PgmmEmUpdate(const Pgmm &pgmm, const PgmmEmAccumulator &acc, std::vector<int> *empty_states) {
  Pgmm out = pgmm;
  for (int i = 0; i < pgmm.NumStates(); i++) {
    if (acc.states()[i].TotalCount() < 1e-8) {
      LogWarning("PGMM state " + std::to_string(pgmm.states[i]) + " received no data; left unchanged");
      if (empty_states) empty_states->push_back(pgmm.states[i]);
      continue;
    }
    out.gmms[i] = acc.states()[i].Update(pgmm.gmms[i], pgmm.variance_floor);
  }
  return out;
}

Pgmm PgmmEmStep(const Pgmm &pgmm, const std::vector<AlignmentMatrix> &alignments,
                const std::vector<FeatureSequence> &feats, double *objective) {
  if (alignments.size() != feats.size()) Fail(ErrorCode::kShapeMismatch, "alignment and feature lists differ in length");
  PgmmEmAccumulator acc(pgmm);
  for (size_t u = 0; u < feats.size(); u++) acc.Accumulate(pgmm, alignments[u], feats[u]);
  if (objective) *objective = acc.objective();
  return PgmmEmUpdate(pgmm, acc);
}

MixturePosteriors ComputeMixturePosteriors(const Pgmm &model, const AlignmentMatrix &align,
                                           const FeatureSequence &feats, double prune) {
  if (model.IsUbm()) return UbmMixturePosteriors(model, feats, prune);
  CheckPair(align, feats);
  if (feats.Dim() != model.Dim())
    Fail(ErrorCode::kShapeMismatch, "features dim ", feats.Dim(), " vs model ", model.Dim());
  std::vector<int> offsets = model.MixtureOffsets();
  MixturePosteriors out;
  out.num_mixtures = offsets.back();
  out.source = align.FromHmm() ? PosteriorSource::kHmm : PosteriorSource::kDnn;
  out.frames.resize(feats.NumFrames());
  for (int i = 0; i < model.NumStates(); i++) {
    std::vector<int> active;
    for (int t = 0; t < feats.NumFrames(); t++)
      if (align.posteriors(t, model.states[i]) > prune) active.push_back(t);
    if (active.empty()) continue;
    Matrix frames(static_cast<Eigen::Index>(active.size()), feats.Dim());
    for (size_t k = 0; k < active.size(); k++) frames.row(static_cast<Eigen::Index>(k)) = feats.frames.row(active[k]);
    Matrix ll = model.gmms[i].ComponentLogLikes(frames);
    for (size_t k = 0; k < active.size(); k++) {
      const int t = active[k];
      const double ps = align.posteriors(t, model.states[i]);
      double total = LogSumExp(ll.row(static_cast<Eigen::Index>(k)).transpose());
      for (Eigen::Index c = 0; c < ll.cols(); c++) {
        double g = ps * std::exp(ll(static_cast<Eigen::Index>(k), c) - total);
        if (g >= prune) out.frames[t].push_back({offsets[i] + static_cast<int>(c), g});
      }
    }
  }
  return out;
}

MixturePosteriors ComputeMixturePosteriors(const HmmSet &model, const AlignmentMatrix &align,
                                           const FeatureSequence &feats, double prune) {
  return HmmMixturePosteriors(model, align, feats, prune);
}

MixturePosteriors UbmMixturePosteriors(const Pgmm &ubm, const FeatureSequence &feats, double prune) {
  if (!ubm.IsUbm()) Fail(ErrorCode::kShapeMismatch, "model is not a single-state UBM");
  if (feats.Dim() != ubm.Dim()) Fail(ErrorCode::kShapeMismatch, "features dim ", feats.Dim(), " vs UBM ", ubm.Dim());
  Matrix ll = ubm.gmms[0].ComponentLogLikes(feats.frames);
  MixturePosteriors out;
  out.num_mixtures = ubm.NumMixtures();
  out.source = PosteriorSource::kUbm;
  out.frames.resize(feats.NumFrames());
  for (int t = 0; t < feats.NumFrames(); t++) {
    double total = LogSumExp(ll.row(t).transpose());
    for (int c = 0; c < out.num_mixtures; c++) {
      double g = std::exp(ll(t, c) - total);
      if (g >= prune) out.frames[t].push_back({c, g});
    }
  }
  return out;
}

SuffStats SuffStats::Zero(int num_mixtures, int dim) {
  SuffStats s;
  s.occupancy = Vector::Zero(num_mixtures);
  s.first = Matrix::Zero(num_mixtures, dim);
  s.second = Matrix::Zero(num_mixtures, dim);
  return s;
}

void SuffStats::Add(const SuffStats &other) {
  if (other.NumMixtures() != NumMixtures() || other.Dim() != Dim())
    Fail(ErrorCode::kShapeMismatch, "cannot merge statistics of different shapes");
  if (!background_id.empty() && !other.background_id.empty() && background_id != other.background_id)
    Fail(ErrorCode::kInconsistentBackground, "statistics computed against different background models");
  if (background_id.empty()) background_id = other.background_id;
  occupancy += other.occupancy;
  first += other.first;
  second += other.second;
}

SuffStats AccumulateStats(const MixturePosteriors &gammas, const FeatureSequence &feats, const Matrix &means) {
  if (gammas.NumFrames() != feats.NumFrames())
    Fail(ErrorCode::kShapeMismatch, gammas.NumFrames(), " posterior frames vs ", feats.NumFrames(), " feature frames");
  if (gammas.num_mixtures != means.rows() || feats.Dim() != means.cols())
    Fail(ErrorCode::kShapeMismatch, "posteriors over ", gammas.num_mixtures, " mixtures vs means ", means.rows(), "x",
         means.cols());
  SuffStats stats = SuffStats::Zero(static_cast<int>(means.rows()), static_cast<int>(means.cols()));
  for (int t = 0; t < feats.NumFrames(); t++) {
    for (const auto &[m, g] : gammas.frames[t]) {
      if (m < 0 || m >= gammas.num_mixtures) Fail(ErrorCode::kShapeMismatch, "mixture index ", m, " out of range");
      Eigen::RowVectorXd centered = feats.frames.row(t) - means.row(m);
      stats.occupancy(m) += g;
      stats.first.row(m) += g * centered;
      stats.second.row(m) += g * centered.cwiseAbs2();
    }
  }
  return stats;
}

}  // namespace dpsv
