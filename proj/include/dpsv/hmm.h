// dpsv/hmm.h

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

#ifndef DPSV_HMM_H_
#define DPSV_HMM_H_

#include <string>
#include <vector>

#include "dpsv/alignment.h"
#include "dpsv/diag-gmm.h"
#include "dpsv/features.h"

namespace dpsv {

struct HmmState {
  DiagGmm gmm;
  double self_loop = 0.6;  // forward probability is 1 - self_loop
};

/// Whole-word left-to-right models for "0".."9" and "sil", three emitting
/// states each, 33 states in word-major order.
struct HmmSet {
  std::vector<HmmState> states;  // size kNumStates once trained

  int Dim() const { return states.empty() ? 0 : states[0].gmm.Dim(); }
  int NumComponents(int state) const { return states[state].gmm.NumComponents(); }
  /// Log emission likelihoods T x 33 (columns for states outside `needed`
  /// are left at -inf when `needed` is non-empty).
  Matrix EmissionLogLikes(const FeatureSequence &feats, const std::vector<int> &needed = {}) const;
  void Check() const;
};

std::string WordName(int word);
/// "0".."9" -> 0..9, "sil" -> 10; -1 otherwise.
int WordIndex(const std::string &token);
inline int FirstState(int word) { return word * kStatesPerWord; }

enum class SilencePolicy { kNone, kEndsOnly, kOptionalBetween };

SilencePolicy ParseSilencePolicy(const std::string &name);

/// States of a transcription compiled into a left-to-right graph. Nodes are
/// stored in topological order; every arc goes from a lower to a higher node
/// index, and each node also has a self loop.
struct StateGraph {
  struct Arc {
    int from;
    int to;
    double log_prob;
  };
  std::vector<int> states;          // global state index per node
  std::vector<double> self_log_prob;
  std::vector<Arc> arcs;            // sorted by `to`, then `from`
  std::vector<int> entries;         // nodes a path may start in
  std::vector<bool> is_exit;        // nodes a path may end in
  int min_length = 0;               // fewest frames of any complete path

  int NumNodes() const { return static_cast<int>(states.size()); }
};

/// Parses a digit string ("12345"; whitespace between digits is ignored).
std::vector<int> ParseDigits(const std::string &transcription);

/// Compiles a transcription. Transition log-probabilities come from `hmms`
/// (self loop a, forward 1-a split evenly over the successors); with an
/// empty HmmSet the 0.6/0.4 flat-start values are used.
StateGraph CompileGraph(const std::string &transcription, const HmmSet &hmms,
                        SilencePolicy policy = SilencePolicy::kOptionalBetween);

/// Builds a graph straight from a node state sequence with linear arcs,
/// using the given per-node self-loop probabilities.
StateGraph LinearGraph(const std::vector<int> &states, const std::vector<double> &self_loops);

struct ViterbiResult {
  std::vector<int> nodes;   // graph node per frame
  std::vector<int> states;  // global state per frame
  double log_prob = kLogZero;
};

/// Best path through `graph` given T x 33 log emission scores. Ties go to
/// the lower node index.
ViterbiResult ViterbiAlign(const StateGraph &graph, const Matrix &emissions);
ViterbiResult ViterbiAlign(const HmmSet &hmms, const StateGraph &graph, const FeatureSequence &feats);

/// Forward-backward state posteriors (log domain). Returns the total log
/// likelihood through `total_log_like` when non-null.
AlignmentMatrix FbAlign(const StateGraph &graph, const Matrix &emissions,
                        double *total_log_like = nullptr);
AlignmentMatrix FbAlign(const HmmSet &hmms, const StateGraph &graph, const FeatureSequence &feats,
                        double *total_log_like = nullptr);

struct TrainingUtterance {
  std::string id;
  FeatureSequence feats;
  std::string transcription;
};

struct HmmTrainConfig {
  int target_components = 16;
  int initial_passes = 4;
  int passes_per_size = 2;
  int em_iterations_per_pass = 4;
  double initial_self_loop = 0.6;
  double variance_floor = 1e-3;
  SilencePolicy policy = SilencePolicy::kOptionalBetween;
};

struct HmmTrainTrace {
  struct Entry {
    int num_components;
    int pass;
    double log_likelihood;  // total corpus Viterbi log-likelihood
  };
  std::vector<Entry> entries;
};

/// Flat start (uniform segmentation over the mandatory-path states), then
/// Viterbi re-alignment passes with mixture growth to target_components.
HmmSet TrainHmmSet(const std::vector<TrainingUtterance> &corpus, const HmmTrainConfig &cfg = {},
                   HmmTrainTrace *trace = nullptr);

/// gamma_{s,c,t} = P(s | x_t, h) P(c | x_t, lambda_s) over all 33 states
/// (silence included). Mixture index = sum of component counts of the
/// preceding states + c.
MixturePosteriors HmmMixturePosteriors(const HmmSet &hmms, const AlignmentMatrix &align,
                                       const FeatureSequence &feats, double prune = 0.0);

}  // namespace dpsv

#endif  // DPSV_HMM_H_
