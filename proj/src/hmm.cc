// src/hmm.cc

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

#include "dpsv/hmm.h"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace dpsv {

std::string WordName(int word) {
  if (word == kSilenceWord) return "sil";
  return std::string(1, static_cast<char>('0' + word));
}

int WordIndex(const std::string &token) {
  if (token == "sil") return kSilenceWord;
  if (token.size() == 1 && token[0] >= '0' && token[0] <= '9') return token[0] - '0';
  return -1;
}

SilencePolicy ParseSilencePolicy(const std::string &name) {
  if (name == "none") return SilencePolicy::kNone;
  if (name == "ends_only" || name == "ends-only") return SilencePolicy::kEndsOnly;
  if (name == "optional_between" || name == "optional-between") return SilencePolicy::kOptionalBetween;
  Fail(ErrorCode::kConfigInvalid, "unknown silence policy '", name, "'");
}

void HmmSet::Check() const {
  if (static_cast<int>(states.size()) != kNumStates)
    Fail(ErrorCode::kWrongStateCount, "HMM set has ", states.size(), " states, expected ", kNumStates);
  for (const HmmState &s : states) {
    if (!(s.self_loop > 0 && s.self_loop < 1))
      Fail(ErrorCode::kConfigInvalid, "self-loop probability ", s.self_loop, " outside (0,1)");
    if (s.gmm.Dim() != Dim()) Fail(ErrorCode::kDimMismatch, "state GMMs disagree on dimension");
  }
}

Matrix HmmSet::EmissionLogLikes(const FeatureSequence &feats, const std::vector<int> &needed) const {
  if (static_cast<int>(states.size()) != kNumStates)
    Fail(ErrorCode::kWrongStateCount, "HMM set is not trained");
  if (feats.Dim() != Dim())
    Fail(ErrorCode::kDimMismatch, "features have dim ", feats.Dim(), ", HMMs expect ", Dim());
  Matrix out = Matrix::Constant(feats.NumFrames(), kNumStates, kLogZero);
  std::vector<bool> want(kNumStates, needed.empty());
  for (int s : needed) want.at(s) = true;
  for (int s = 0; s < kNumStates; s++)
    if (want[s]) out.col(s) = states[s].gmm.LogLikelihoods(feats.frames);
  return out;
}

std::vector<int> ParseDigits(const std::string &transcription) {
  std::vector<int> digits;
  for (char ch : transcription) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch < '0' || ch > '9')
      Fail(ErrorCode::kUnknownToken, "token '", ch, "' in transcription \"", transcription, "\"");
    digits.push_back(ch - '0');
  }
  if (digits.empty()) Fail(ErrorCode::kUnknownToken, "empty transcription");
  return digits;
}

namespace {

double SelfLoopOf(const HmmSet &hmms, int state) {
  return hmms.states.empty() ? 0.6 : hmms.states[state].self_loop;
}

void SortArcs(StateGraph *graph) {
  std::sort(graph->arcs.begin(), graph->arcs.end(), [](const auto &a, const auto &b) {
    return a.to != b.to ? a.to < b.to : a.from < b.from;
  });
}

}  // namespace

StateGraph CompileGraph(const std::string &transcription, const HmmSet &hmms, SilencePolicy policy) {
  std::vector<int> digits = ParseDigits(transcription);
  struct Segment {
    int word;
    bool optional;
  };
  std::vector<Segment> segments;
  if (policy != SilencePolicy::kNone) segments.push_back({kSilenceWord, false});
  for (size_t k = 0; k < digits.size(); k++) {
    segments.push_back({digits[k], false});
    if (policy == SilencePolicy::kOptionalBetween && k + 1 < digits.size())
      segments.push_back({kSilenceWord, true});
  }
  if (policy != SilencePolicy::kNone) segments.push_back({kSilenceWord, false});

  StateGraph graph;
  const int num_seg = static_cast<int>(segments.size());
  for (int i = 0; i < num_seg; i++) {
    for (int k = 0; k < kStatesPerWord; k++) {
      int state = FirstState(segments[i].word) + k;
      graph.states.push_back(state);
      graph.self_log_prob.push_back(std::log(SelfLoopOf(hmms, state)));
    }
    if (!segments[i].optional) graph.min_length += kStatesPerWord;
  }
  graph.is_exit.assign(graph.states.size(), false);
  graph.is_exit.back() = true;
  graph.entries.push_back(0);

  for (int i = 0; i < num_seg; i++) {
    int base = i * kStatesPerWord;
    for (int k = 0; k + 1 < kStatesPerWord; k++) {
      int node = base + k;
      graph.arcs.push_back({node, node + 1, std::log(1.0 - SelfLoopOf(hmms, graph.states[node]))});
    }
    std::vector<int> next;
    if (i + 1 < num_seg) next.push_back(i + 1);
    if (i + 2 < num_seg && segments[i + 1].optional) next.push_back(i + 2);
    int last = base + kStatesPerWord - 1;
    double leave = std::log(1.0 - SelfLoopOf(hmms, graph.states[last]));
    for (int seg : next)
      graph.arcs.push_back({last, seg * kStatesPerWord, leave - std::log(static_cast<double>(next.size()))});
  }
  SortArcs(&graph);
  return graph;
}

StateGraph LinearGraph(const std::vector<int> &states, const std::vector<double> &self_loops) {
  if (states.empty() || states.size() != self_loops.size())
    Fail(ErrorCode::kShapeMismatch, "linear graph needs one self loop per state");
  StateGraph graph;
  graph.states = states;
  for (size_t i = 0; i < states.size(); i++) {
    if (states[i] < 0 || states[i] >= kNumStates) Fail(ErrorCode::kShapeMismatch, "state out of range");
    graph.self_log_prob.push_back(std::log(self_loops[i]));
    if (i + 1 < states.size())
      graph.arcs.push_back({static_cast<int>(i), static_cast<int>(i + 1), std::log(1.0 - self_loops[i])});
  }
  graph.entries = {0};
  graph.is_exit.assign(states.size(), false);
  graph.is_exit.back() = true;
  graph.min_length = static_cast<int>(states.size());
  return graph;
}

namespace {

void CheckAlignable(const StateGraph &graph, const Matrix &emissions) {
  if (graph.NumNodes() == 0) Fail(ErrorCode::kShapeMismatch, "empty graph");
  if (emissions.cols() != kNumStates)
    Fail(ErrorCode::kWidthMismatch, "emission matrix has ", emissions.cols(), " columns");
  if (emissions.rows() < graph.min_length)
    Fail(ErrorCode::kTooShort, emissions.rows(), " frames but the graph needs at least ", graph.min_length);
}

std::vector<int> GraphStates(const StateGraph &graph) {
  std::vector<int> s = graph.states;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace

ViterbiResult ViterbiAlign(const StateGraph &graph, const Matrix &emissions) {
  CheckAlignable(graph, emissions);
  const int num_frames = static_cast<int>(emissions.rows()), num_nodes = graph.NumNodes();
  Matrix delta = Matrix::Constant(num_frames, num_nodes, kLogZero);
  std::vector<int> back(static_cast<size_t>(num_frames) * num_nodes, -1);
  for (int j : graph.entries) delta(0, j) = emissions(0, graph.states[j]);

  for (int t = 1; t < num_frames; t++) {
    size_t arc = 0;
    for (int j = 0; j < num_nodes; j++) {
      // Candidates in increasing node order; strict > keeps the lowest index on ties.
      double best = kLogZero;
      int arg = -1;
      for (; arc < graph.arcs.size() && graph.arcs[arc].to == j; arc++) {
        const auto &a = graph.arcs[arc];
        double v = delta(t - 1, a.from) + a.log_prob;
        if (v > best) best = v, arg = a.from;
      }
      double stay = delta(t - 1, j) + graph.self_log_prob[j];
      if (stay > best) best = stay, arg = j;
      if (arg < 0) continue;
      delta(t, j) = best + emissions(t, graph.states[j]);
      back[static_cast<size_t>(t) * num_nodes + j] = arg;
    }
  }
  ViterbiResult result;
  int last = -1;
  for (int j = 0; j < num_nodes; j++)
    if (graph.is_exit[j] && delta(num_frames - 1, j) > result.log_prob)
      result.log_prob = delta(num_frames - 1, j), last = j;
  if (last < 0) Fail(ErrorCode::kUnalignableUtterance, "no complete path has nonzero probability");
  result.nodes.resize(num_frames);
  result.states.resize(num_frames);
  for (int t = num_frames - 1; t >= 0; t--) {
    result.nodes[t] = last;
    result.states[t] = graph.states[last];
    if (t > 0) last = back[static_cast<size_t>(t) * num_nodes + last];
  }
  return result;
}

ViterbiResult ViterbiAlign(const HmmSet &hmms, const StateGraph &graph, const FeatureSequence &feats) {
  if (feats.NumFrames() < graph.min_length)
    Fail(ErrorCode::kTooShort, feats.NumFrames(), " frames but the graph needs at least ", graph.min_length);
  return ViterbiAlign(graph, hmms.EmissionLogLikes(feats, GraphStates(graph)));
}

AlignmentMatrix FbAlign(const StateGraph &graph, const Matrix &emissions, double *total_log_like) {
  CheckAlignable(graph, emissions);
  const int num_frames = static_cast<int>(emissions.rows()), num_nodes = graph.NumNodes();
  Matrix alpha = Matrix::Constant(num_frames, num_nodes, kLogZero);
  Matrix beta = Matrix::Constant(num_frames, num_nodes, kLogZero);
  for (int j : graph.entries) alpha(0, j) = emissions(0, graph.states[j]);
  for (int t = 1; t < num_frames; t++) {
    for (int j = 0; j < num_nodes; j++) alpha(t, j) = alpha(t - 1, j) + graph.self_log_prob[j];
    for (const auto &a : graph.arcs) alpha(t, a.to) = LogAdd(alpha(t, a.to), alpha(t - 1, a.from) + a.log_prob);
    for (int j = 0; j < num_nodes; j++) alpha(t, j) += emissions(t, graph.states[j]);
  }
  for (int j = 0; j < num_nodes; j++)
    if (graph.is_exit[j]) beta(num_frames - 1, j) = 0.0;
  for (int t = num_frames - 2; t >= 0; t--) {
    for (int j = 0; j < num_nodes; j++)
      beta(t, j) = graph.self_log_prob[j] + emissions(t + 1, graph.states[j]) + beta(t + 1, j);
    for (const auto &a : graph.arcs)
      beta(t, a.from) = LogAdd(beta(t, a.from), a.log_prob + emissions(t + 1, graph.states[a.to]) + beta(t + 1, a.to));
  }
  double total = kLogZero;
  for (int j = 0; j < num_nodes; j++)
    if (graph.is_exit[j]) total = LogAdd(total, alpha(num_frames - 1, j));
  if (!std::isfinite(total)) Fail(ErrorCode::kUnalignableUtterance, "no complete path has nonzero probability");
  if (total_log_like) *total_log_like = total;

  AlignmentMatrix out;
  out.source = AlignmentSource::kHmmFb;
  out.posteriors = Matrix::Zero(num_frames, kNumStates);
  for (int t = 0; t < num_frames; t++) {
    for (int j = 0; j < num_nodes; j++) {
      double lp = alpha(t, j) + beta(t, j) - total;
      if (lp > kLogZero) out.posteriors(t, graph.states[j]) += std::exp(lp);
    }
    out.posteriors.row(t) /= out.posteriors.row(t).sum();
  }
  return out;
}

AlignmentMatrix FbAlign(const HmmSet &hmms, const StateGraph &graph, const FeatureSequence &feats,
                        double *total_log_like) {
  if (feats.NumFrames() < graph.min_length)
    Fail(ErrorCode::kTooShort, feats.NumFrames(), " frames but the graph needs at least ", graph.min_length);
  return FbAlign(graph, hmms.EmissionLogLikes(feats, GraphStates(graph)), total_log_like);
}

namespace {

Matrix GatherRows(const std::vector<const Matrix *> &sources, const std::vector<std::pair<int, int>> &rows,
                  int dim) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); i++) out.row(static_cast<Eigen::Index>(i)) = sources[rows[i].first]->row(rows[i].second);
  return out;
}

}  // namespace

HmmSet TrainHmmSet(const std::vector<TrainingUtterance> &corpus, const HmmTrainConfig &cfg,
                   HmmTrainTrace *trace) {
  if (corpus.empty()) Fail(ErrorCode::kMissingDigitCoverage, "empty training corpus");
  const int target = cfg.target_components;
  if (target < 1 || (target & (target - 1)) != 0)
    Fail(ErrorCode::kConfigInvalid, "target_components must be a power of two");

  std::vector<bool> seen(10, false);
  const int dim = corpus[0].feats.Dim();
  std::vector<const Matrix *> sources;
  int total_frames = 0;
  for (const auto &utt : corpus) {
    for (int d : ParseDigits(utt.transcription)) seen[d] = true;
    if (utt.feats.Dim() != dim) Fail(ErrorCode::kDimMismatch, "utterance ", utt.id, " has dim ", utt.feats.Dim());
    sources.push_back(&utt.feats.frames);
    total_frames += utt.feats.NumFrames();
  }
  for (int d = 0; d < 10; d++)
    if (!seen[d]) Fail(ErrorCode::kMissingDigitCoverage, "digit ", d, " never occurs in the training transcriptions");

  Matrix all(total_frames, dim);
  {
    int row = 0;
    for (const auto &utt : corpus) {
      all.middleRows(row, utt.feats.NumFrames()) = utt.feats.frames;
      row += utt.feats.NumFrames();
    }
  }
  const Vector floor = VarianceFloor(all, cfg.variance_floor);
  const DiagGmm global = FitSingleGaussian(all, nullptr, floor);

  // Frames assigned to each state: (utterance, frame) pairs.
  std::vector<std::vector<std::pair<int, int>>> assigned(kNumStates);

  // Flat start over the mandatory path.
  SilencePolicy flat_policy =
      cfg.policy == SilencePolicy::kOptionalBetween ? SilencePolicy::kEndsOnly : cfg.policy;
  for (size_t u = 0; u < corpus.size(); u++) {
    StateGraph graph = CompileGraph(corpus[u].transcription, HmmSet{}, flat_policy);
    const int num_frames = corpus[u].feats.NumFrames(), num_nodes = graph.NumNodes();
    if (num_frames < CompileGraph(corpus[u].transcription, HmmSet{}, cfg.policy).min_length)
      Fail(ErrorCode::kUnalignableUtterance, "utterance ", corpus[u].id, " has ", num_frames,
           " frames, too short for \"", corpus[u].transcription, "\"");
    for (int t = 0; t < num_frames; t++) {
      int node = static_cast<int>(static_cast<int64_t>(t) * num_nodes / num_frames);
      assigned[graph.states[node]].push_back({static_cast<int>(u), t});
    }
  }
  HmmSet hmms;
  hmms.states.resize(kNumStates);
  for (int s = 0; s < kNumStates; s++) {
    hmms.states[s].self_loop = cfg.initial_self_loop;
    if (assigned[s].size() >= 2) {
      hmms.states[s].gmm = FitSingleGaussian(GatherRows(sources, assigned[s], dim), nullptr, floor);
    } else {
      hmms.states[s].gmm = global;
    }
  }

  auto realign = [&](int pass) {
    double total = 0.0;
    for (auto &a : assigned) a.clear();
    std::vector<double> self_count(kNumStates, 0.0), leave_count(kNumStates, 0.0);
    for (size_t u = 0; u < corpus.size(); u++) {
      StateGraph graph = CompileGraph(corpus[u].transcription, hmms, cfg.policy);
      ViterbiResult path;
      try {
        path = ViterbiAlign(hmms, graph, corpus[u].feats);
      } catch (const Error &e) {
        Fail(ErrorCode::kUnalignableUtterance, "utterance ", corpus[u].id, ": ", e.what());
      }
      total += path.log_prob;
      for (size_t t = 0; t < path.nodes.size(); t++) {
        assigned[path.states[t]].push_back({static_cast<int>(u), static_cast<int>(t)});
        if (t + 1 < path.nodes.size()) {
          if (path.nodes[t + 1] == path.nodes[t]) {
            self_count[path.states[t]] += 1;
          } else {
            leave_count[path.states[t]] += 1;
          }
        }
      }
    }
    if (trace) trace->entries.push_back({hmms.states[0].gmm.NumComponents(), pass, total});
    for (int s = 0; s < kNumStates; s++) {
      double n = self_count[s] + leave_count[s];
      if (n > 0) hmms.states[s].self_loop = std::clamp(self_count[s] / n, 1e-3, 1.0 - 1e-3);
    }
  };
  auto reestimate = [&]() {
    for (int s = 0; s < kNumStates; s++) {
      if (assigned[s].empty()) continue;
      Matrix frames = GatherRows(sources, assigned[s], dim);
      hmms.states[s].gmm = RunEm(hmms.states[s].gmm, frames, nullptr, cfg.em_iterations_per_pass, floor);
    }
  };

  int pass = 0;
  for (int i = 0; i < cfg.initial_passes; i++, pass++) {
    realign(pass);
    reestimate();
  }
  for (int size = 2; size <= target; size *= 2) {
    for (auto &state : hmms.states) state.gmm = SplitComponents(state.gmm);
    reestimate();
    for (int i = 0; i < cfg.passes_per_size; i++, pass++) {
      realign(pass);
      reestimate();
    }
  }
  // Final alignment so the trace ends on the returned model.
  if (trace) {
    HmmSet copy = hmms;
    realign(pass);
    hmms = copy;
  }
  return hmms;
}

MixturePosteriors HmmMixturePosteriors(const HmmSet &hmms, const AlignmentMatrix &align,
                                       const FeatureSequence &feats, double prune) {
  if (!align.FromHmm())
    Fail(ErrorCode::kSourceMismatch, "HMM mixture posteriors need an HMM alignment, got ",
         AlignmentSourceName(align.source));
  if (align.NumStates() != kNumStates || align.NumFrames() != feats.NumFrames())
    Fail(ErrorCode::kShapeMismatch, "alignment ", align.NumFrames(), "x", align.NumStates(),
         " vs features with ", feats.NumFrames(), " frames");
  std::vector<int> offsets(kNumStates + 1, 0);
  for (int s = 0; s < kNumStates; s++) offsets[s + 1] = offsets[s] + hmms.NumComponents(s);
  MixturePosteriors out;
  out.num_mixtures = offsets[kNumStates];
  out.source = PosteriorSource::kHmm;
  out.frames.resize(feats.NumFrames());
  for (int t = 0; t < feats.NumFrames(); t++) {
    for (int s = 0; s < kNumStates; s++) {
      double ps = align.posteriors(t, s);
      if (ps <= 0.0) continue;
      Vector post = hmms.states[s].gmm.ComponentPosteriors(feats.frames.row(t).transpose());
      for (int c = 0; c < post.size(); c++) {
        double g = ps * post(c);
        if (g > prune) out.frames[t].push_back({offsets[s] + c, g});
      }
    }
  }
  return out;
}

}  // namespace dpsv
