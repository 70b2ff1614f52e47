// dpsv/mlp.h

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

#ifndef DPSV_MLP_H_
#define DPSV_MLP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpsv/alignment.h"
#include "dpsv/features.h"

namespace dpsv {

struct MlpLayer {
  Matrix weight;  // out x in
  Vector bias;
};

/// Feed-forward frame classifier: ReLU hidden layers and a softmax output.
/// Inputs are normalized with stored per-feature mean and inverse stddev.
struct MlpModel {
  Vector input_mean;
  Vector input_inv_std;
  std::vector<MlpLayer> layers;  // hidden layers, then the output layer
  Vector log_priors;             // class log priors of the training labels

  int InputDim() const { return static_cast<int>(input_mean.size()); }
  int OutputDim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().bias.size()); }

  Matrix Normalize(const Matrix &inputs) const;
  /// Class posteriors, one row per input row.
  Matrix Posteriors(const Matrix &inputs) const;
  void Check() const;
};

struct MlpTrainConfig {
  std::vector<int> hidden = {512, 512, 512, 512};
  int num_classes = kNumStates;
  double learning_rate = 0.02;
  double lr_decay = 0.7;  // multiplied into the rate after every epoch
  double momentum = 0.9;
  int batch_size = 256;
  int epochs = 6;
  double held_out_fraction = 0.1;
  std::uint64_t seed = 0;

  void Check() const;
};

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Randomly initialized model (uniform, limit sqrt(6 / fan_in)).
MlpModel InitMlp(int input_dim, const MlpTrainConfig &cfg);

/// Mean frame cross-entropy of already-normalized inputs; fills `grads`
/// when non-null.
double MlpLossAndGradient(const MlpModel &model, const Matrix &normalized_inputs,
                          const std::vector<int> &labels, MlpGradients *grads);

struct MlpTrainReport {
  std::vector<double> train_loss;     // per epoch
  std::vector<double> held_out_loss;  // per epoch
  double prior_baseline = 0.0;        // -log of the most frequent class prior
  double train_accuracy = 0.0;
};

/// Mini-batch SGD with momentum. Every class 0..num_classes-1 needs at
/// least one example. If the loss goes non-finite, `last_stable` (when
/// non-null) receives the last end-of-epoch model and NonFiniteLoss is thrown.
MlpModel TrainMlp(const Matrix &inputs, const std::vector<int> &labels, const MlpTrainConfig &cfg,
                  MlpTrainReport *report = nullptr, MlpModel *last_stable = nullptr);

/// Same, splicing FBANK120 utterances on the fly (context frames either
/// side) instead of materializing every spliced frame.
MlpModel TrainMlpOnUtterances(const std::vector<FeatureSequence> &fbank,
                              const std::vector<std::vector<int>> &labels, int context,
                              const MlpTrainConfig &cfg, MlpTrainReport *report = nullptr,
                              MlpModel *last_stable = nullptr);

/// P(s | x_t) for spliced features.
AlignmentMatrix MlpPosteriors(const MlpModel &model, const FeatureSequence &spliced);

/// Scaled log-likelihoods log P(s|x) - log P(s), the emission scores of the
/// hybrid DNN-HMM.
Matrix DnnEmissionLogLikes(const MlpModel &model, const FeatureSequence &spliced);
Matrix DnnEmissionLogLikes(const AlignmentMatrix &dnn_posteriors, const Vector &log_priors);

/// Reads posteriors computed by any external classifier (DVPO file).
AlignmentMatrix LoadExternalPosteriors(const std::string &path);

}  // namespace dpsv

#endif  // DPSV_MLP_H_
