// src/mlp.cc

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

#include "dpsv/mlp.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "dpsv/io.h"

namespace dpsv {

Matrix MlpModel::Normalize(const Matrix &inputs) const {
  if (inputs.cols() != InputDim())
    Fail(ErrorCode::kDimMismatch, "input width ", inputs.cols(), ", model expects ", InputDim());
  return (inputs.rowwise() - input_mean.transpose()).array().rowwise() * input_inv_std.transpose().array();
}

namespace {

void SoftmaxRows(Matrix *logits) {
  for (Eigen::Index i = 0; i < logits->rows(); i++) {
    auto row = logits->row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

// Activations of every layer (pre-softmax logits last).
std::vector<Matrix> ForwardPass(const MlpModel &model, const Matrix &normalized) {
  std::vector<Matrix> acts;
  acts.reserve(model.layers.size());
  const Matrix *input = &normalized;
  for (size_t l = 0; l < model.layers.size(); l++) {
    const MlpLayer &layer = model.layers[l];
    Matrix z = *input * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < model.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
    input = &acts.back();
  }
  return acts;
}

}  // namespace

Matrix MlpModel::Posteriors(const Matrix &inputs) const {
  std::vector<Matrix> acts = ForwardPass(*this, Normalize(inputs));
  Matrix out = std::move(acts.back());
  SoftmaxRows(&out);
  return out;
}

void MlpModel::Check() const {
  if (layers.empty()) Fail(ErrorCode::kShapeMismatch, "MLP has no layers");
  if (input_inv_std.size() != input_mean.size()) Fail(ErrorCode::kShapeMismatch, "normalizer sizes differ");
  Eigen::Index width = input_mean.size();
  for (const MlpLayer &l : layers) {
    if (l.weight.cols() != width || l.bias.size() != l.weight.rows())
      Fail(ErrorCode::kShapeMismatch, "inconsistent MLP layer shapes");
    width = l.weight.rows();
  }
  if (log_priors.size() != width) Fail(ErrorCode::kShapeMismatch, "prior vector has wrong size");
}

void MlpTrainConfig::Check() const {
  if (epochs < 1) Fail(ErrorCode::kConfigInvalid, "epochs must be >= 1");
  if (!(held_out_fraction > 0 && held_out_fraction < 0.5))
    Fail(ErrorCode::kConfigInvalid, "held-out fraction must lie in (0, 0.5)");
  if (batch_size < 1 || num_classes < 2) Fail(ErrorCode::kConfigInvalid, "bad batch size or class count");
  for (int h : hidden)
    if (h < 1) Fail(ErrorCode::kConfigInvalid, "hidden layer width must be positive");
}

MlpModel InitMlp(int input_dim, const MlpTrainConfig &cfg) {
  std::mt19937_64 rng(cfg.seed);
  MlpModel model;
  model.input_mean = Vector::Zero(input_dim);
  model.input_inv_std = Vector::Ones(input_dim);
  int fan_in = input_dim;
  std::vector<int> widths = cfg.hidden;
  widths.push_back(cfg.num_classes);
  for (int width : widths) {
    std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
    MlpLayer layer;
    layer.weight.resize(width, fan_in);
    for (Eigen::Index i = 0; i < layer.weight.size(); i++) layer.weight.data()[i] = dist(rng);
    layer.bias = Vector::Zero(width);
    model.layers.push_back(std::move(layer));
    fan_in = width;
  }
  model.log_priors = Vector::Constant(cfg.num_classes, -std::log(static_cast<double>(cfg.num_classes)));
  return model;
}

double MlpLossAndGradient(const MlpModel &model, const Matrix &normalized_inputs,
                          const std::vector<int> &labels, MlpGradients *grads) {
  const Eigen::Index n = normalized_inputs.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) Fail(ErrorCode::kShapeMismatch, "one label per input row");
  std::vector<Matrix> acts = ForwardPass(model, normalized_inputs);
  Matrix prob = acts.back();
  SoftmaxRows(&prob);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; i++) loss -= std::log(std::max(prob(i, labels[i]), 1e-300));
  loss /= static_cast<double>(n);
  if (!grads) return loss;

  const size_t num_layers = model.layers.size();
  grads->weights.resize(num_layers);
  grads->biases.resize(num_layers);
  Matrix delta = prob;
  for (Eigen::Index i = 0; i < n; i++) delta(i, labels[i]) -= 1.0;
  delta /= static_cast<double>(n);
  for (size_t l = num_layers; l-- > 0;) {
    const Matrix &input = l == 0 ? normalized_inputs : acts[l - 1];
    grads->weights[l] = delta.transpose() * input;
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix back = delta * model.layers[l].weight;
      delta = (acts[l - 1].array() > 0.0).select(back, 0.0);
    }
  }
  return loss;
}

namespace {

// Fills `out` with the input rows for the given example indices.
using RowProvider = std::function<void(const std::vector<int64_t> &, Matrix *)>;

MlpModel TrainImpl(int64_t num_examples, int input_dim, const RowProvider &provide,
                   const std::vector<int> &labels, const MlpTrainConfig &cfg, MlpTrainReport *report,
                   MlpModel *last_stable) {
  cfg.Check();
  if (static_cast<int64_t>(labels.size()) != num_examples)
    Fail(ErrorCode::kShapeMismatch, labels.size(), " labels for ", num_examples, " examples");
  std::vector<int64_t> counts(cfg.num_classes, 0);
  for (int l : labels) {
    if (l < 0 || l >= cfg.num_classes) Fail(ErrorCode::kMissingClass, "label ", l, " out of range");
    counts[l]++;
  }
  for (int c = 0; c < cfg.num_classes; c++)
    if (counts[c] == 0) Fail(ErrorCode::kMissingClass, "no training example for class ", c);

  MlpModel model = InitMlp(input_dim, cfg);
  // Input normalization over all examples, streamed in chunks.
  {
    Vector sum = Vector::Zero(input_dim), sum_sq = Vector::Zero(input_dim);
    std::vector<int64_t> idx;
    Matrix chunk;
    for (int64_t start = 0; start < num_examples; start += 4096) {
      idx.resize(std::min<int64_t>(4096, num_examples - start));
      std::iota(idx.begin(), idx.end(), start);
      provide(idx, &chunk);
      sum += chunk.colwise().sum().transpose();
      sum_sq += chunk.cwiseAbs2().colwise().sum().transpose();
    }
    model.input_mean = sum / static_cast<double>(num_examples);
    Vector var = sum_sq / static_cast<double>(num_examples) - model.input_mean.cwiseAbs2();
    for (int d = 0; d < input_dim; d++) model.input_inv_std(d) = var(d) > 1e-12 ? 1.0 / std::sqrt(var(d)) : 1.0;
  }
  for (int c = 0; c < cfg.num_classes; c++)
    model.log_priors(c) = std::log(static_cast<double>(counts[c]) / static_cast<double>(num_examples));

  std::mt19937_64 rng(cfg.seed + 1);
  std::vector<int64_t> order(num_examples);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int64_t num_held = std::max<int64_t>(1, static_cast<int64_t>(cfg.held_out_fraction * num_examples));
  if (num_held >= num_examples) num_held = 0;
  std::vector<int64_t> held(order.end() - num_held, order.end());
  std::vector<int64_t> train(order.begin(), order.end() - num_held);

  auto batch_loss = [&](const std::vector<int64_t> &idx, MlpGradients *grads) {
    Matrix rows;
    provide(idx, &rows);
    std::vector<int> y(idx.size());
    for (size_t i = 0; i < idx.size(); i++) y[i] = labels[idx[i]];
    return MlpLossAndGradient(model, model.Normalize(rows), y, grads);
  };
  auto mean_loss = [&](const std::vector<int64_t> &set) {
    double total = 0.0;
    std::vector<int64_t> idx;
    for (size_t start = 0; start < set.size(); start += 4096) {
      idx.assign(set.begin() + start, set.begin() + std::min(set.size(), start + 4096));
      total += batch_loss(idx, nullptr) * static_cast<double>(idx.size());
    }
    return set.empty() ? 0.0 : total / static_cast<double>(set.size());
  };

  std::vector<Matrix> vel_w;
  std::vector<Vector> vel_b;
  for (const MlpLayer &l : model.layers) {
    vel_w.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    vel_b.push_back(Vector::Zero(l.bias.size()));
  }
  MlpModel checkpoint = model;
  double lr = cfg.learning_rate;
  MlpGradients grads;
  std::vector<int64_t> idx;
  for (int epoch = 0; epoch < cfg.epochs; epoch++) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < train.size(); start += cfg.batch_size) {
      idx.assign(train.begin() + start, train.begin() + std::min(train.size(), start + cfg.batch_size));
      double loss = batch_loss(idx, &grads);
      if (!std::isfinite(loss)) {
        if (last_stable) *last_stable = checkpoint;
        Fail(ErrorCode::kNonFiniteLoss, "loss became non-finite in epoch ", epoch);
      }
      epoch_loss += loss * static_cast<double>(idx.size());
      for (size_t l = 0; l < model.layers.size(); l++) {
        vel_w[l] = cfg.momentum * vel_w[l] - lr * grads.weights[l];
        vel_b[l] = cfg.momentum * vel_b[l] - lr * grads.biases[l];
        model.layers[l].weight += vel_w[l];
        model.layers[l].bias += vel_b[l];
      }
    }
    double held_loss = mean_loss(held);
    if (!std::isfinite(held_loss)) {
      if (last_stable) *last_stable = checkpoint;
      Fail(ErrorCode::kNonFiniteLoss, "held-out loss became non-finite in epoch ", epoch);
    }
    checkpoint = model;
    if (report) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(std::max<size_t>(1, train.size())));
      report->held_out_loss.push_back(held_loss);
    }
    lr *= cfg.lr_decay;
  }
  if (report) {
    report->prior_baseline = -model.log_priors.maxCoeff();
    int64_t correct = 0;
    for (size_t start = 0; start < train.size(); start += 4096) {
      idx.assign(train.begin() + start, train.begin() + std::min(train.size(), start + 4096));
      Matrix rows;
      provide(idx, &rows);
      Matrix p = model.Posteriors(rows);
      for (size_t i = 0; i < idx.size(); i++) {
        Eigen::Index arg;
        p.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        if (arg == labels[idx[i]]) correct++;
      }
    }
    report->train_accuracy = static_cast<double>(correct) / static_cast<double>(std::max<size_t>(1, train.size()));
  }
  return model;
}

}  // namespace

MlpModel TrainMlp(const Matrix &inputs, const std::vector<int> &labels, const MlpTrainConfig &cfg,
                  MlpTrainReport *report, MlpModel *last_stable) {
  auto provide = [&](const std::vector<int64_t> &idx, Matrix *out) {
    out->resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
    for (size_t i = 0; i < idx.size(); i++) out->row(static_cast<Eigen::Index>(i)) = inputs.row(idx[i]);
  };
  return TrainImpl(inputs.rows(), static_cast<int>(inputs.cols()), provide, labels, cfg, report, last_stable);
}

MlpModel TrainMlpOnUtterances(const std::vector<FeatureSequence> &fbank,
                              const std::vector<std::vector<int>> &labels, int context,
                              const MlpTrainConfig &cfg, MlpTrainReport *report, MlpModel *last_stable) {
  if (fbank.size() != labels.size()) Fail(ErrorCode::kShapeMismatch, "one label sequence per utterance");
  std::vector<std::pair<int, int>> where;
  std::vector<int> flat_labels;
  int dim = fbank.empty() ? 0 : fbank[0].Dim();
  for (size_t u = 0; u < fbank.size(); u++) {
    if (fbank[u].kind != FeatureKind::kFbank120)
      Fail(ErrorCode::kWrongKind, "MLP training expects FBANK120 input, got ", FeatureKindName(fbank[u].kind));
    if (static_cast<int>(labels[u].size()) != fbank[u].NumFrames())
      Fail(ErrorCode::kShapeMismatch, "utterance ", u, ": ", labels[u].size(), " labels for ",
           fbank[u].NumFrames(), " frames");
    for (int t = 0; t < fbank[u].NumFrames(); t++) {
      where.push_back({static_cast<int>(u), t});
      flat_labels.push_back(labels[u][t]);
    }
  }
  const int width = 2 * context + 1;
  auto provide = [&](const std::vector<int64_t> &idx, Matrix *out) {
    out->resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(dim) * width);
    for (size_t i = 0; i < idx.size(); i++) {
      const auto [u, t] = where[idx[i]];
      const Matrix &f = fbank[u].frames;
      for (int k = -context; k <= context; k++) {
        int src = std::clamp(t + k, 0, static_cast<int>(f.rows()) - 1);
        out->block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + context) * dim, 1, dim) = f.row(src);
      }
    }
  };
  return TrainImpl(static_cast<int64_t>(where.size()), dim * width, provide, flat_labels, cfg, report,
                   last_stable);
}

AlignmentMatrix MlpPosteriors(const MlpModel &model, const FeatureSequence &spliced) {
  if (spliced.kind != FeatureKind::kSpliced)
    Fail(ErrorCode::kWrongKind, "MLP posteriors need SPLICED features, got ", FeatureKindName(spliced.kind));
  AlignmentMatrix out;
  out.source = AlignmentSource::kDnn;
  out.posteriors = model.Posteriors(spliced.frames);
  return out;
}

Matrix DnnEmissionLogLikes(const AlignmentMatrix &dnn_posteriors, const Vector &log_priors) {
  if (dnn_posteriors.NumStates() != log_priors.size())
    Fail(ErrorCode::kWidthMismatch, "posterior width ", dnn_posteriors.NumStates(), " vs ", log_priors.size(),
         " priors");
  Matrix out = dnn_posteriors.posteriors.array().max(1e-300).log().matrix();
  out.rowwise() -= log_priors.transpose();
  return out;
}

Matrix DnnEmissionLogLikes(const MlpModel &model, const FeatureSequence &spliced) {
  return DnnEmissionLogLikes(MlpPosteriors(model, spliced), model.log_priors);
}

AlignmentMatrix LoadExternalPosteriors(const std::string &path) {
  AlignmentMatrix align = ReadPosteriors(path, AlignmentSource::kDnn);
  if (align.NumStates() != kNumStates)
    Fail(ErrorCode::kWrongStateCount, path, " has ", align.NumStates(), " states, expected ", kNumStates);
  return align;
}

}  // namespace dpsv
