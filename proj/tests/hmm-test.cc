// tests/hmm-test.cc

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

#include <random>

#include "doctest.h"
#include "dpsv/hmm.h"
#include "oracles.h"

using namespace dpsv;

namespace {

// Emission table with the given per-frame scores in two state columns.
Matrix TwoStateEmissions(const std::vector<double> &a, const std::vector<double> &b, int sa, int sb) {
  Matrix e = Matrix::Constant(static_cast<Eigen::Index>(a.size()), kNumStates, kLogZero);
  for (size_t t = 0; t < a.size(); t++) {
    e(static_cast<Eigen::Index>(t), sa) = a[t];
    e(static_cast<Eigen::Index>(t), sb) = b[t];
  }
  return e;
}

// Each state of each word has its own mean in `dim` dimensions; frames are
// the mean plus unit noise, three or four frames per state.
std::vector<TrainingUtterance> ToyCorpus(int num_utts, int dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> dwell(3, 4), digit(0, 9);
  Matrix means(kNumStates, dim);
  for (int s = 0; s < kNumStates; s++)
    for (int d = 0; d < dim; d++) means(s, d) = 6.0 * noise(rng);
  std::vector<TrainingUtterance> corpus;
  for (int u = 0; u < num_utts; u++) {
    std::string text;
    if (u == 0) {
      text = "0123456789";
    } else {
      for (int k = 0; k < 5; k++) text += static_cast<char>('0' + digit(rng));
    }
    std::vector<int> words = {kSilenceWord};
    for (char ch : text) words.push_back(ch - '0');
    words.push_back(kSilenceWord);
    std::vector<Vector> frames;
    for (int w : words)
      for (int k = 0; k < 3; k++) {
        int n = dwell(rng);
        for (int i = 0; i < n; i++) {
          Vector f(dim);
          for (int d = 0; d < dim; d++) f(d) = means(FirstState(w) + k, d) + noise(rng);
          frames.push_back(f);
        }
      }
    TrainingUtterance utt;
    utt.id = "u" + std::to_string(u);
    utt.transcription = text;
    utt.feats.frames.resize(static_cast<Eigen::Index>(frames.size()), dim);
    for (size_t t = 0; t < frames.size(); t++) utt.feats.frames.row(static_cast<Eigen::Index>(t)) = frames[t].transpose();
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace

TEST_CASE("graph compilation") {
  StateGraph g7 = CompileGraph("7", HmmSet{}, SilencePolicy::kNone);
  CHECK(g7.states == std::vector<int>{21, 22, 23});
  CHECK(CompileGraph("12345", HmmSet{}, SilencePolicy::kNone).min_length == 15);
  CHECK_THROWS_WITH_AS(CompileGraph("1a3", HmmSet{}, SilencePolicy::kNone), doctest::Contains("UnknownToken"), Error);

  StateGraph g = CompileGraph("12", HmmSet{}, SilencePolicy::kOptionalBetween);
  // sil 1 sil? 2 sil
  CHECK(g.NumNodes() == 15);
  CHECK(g.min_length == 12);
  CHECK(g.states.front() == 30);
  CHECK(g.states[3] == 3);
  CHECK(g.states[6] == 30);
  // Last state of "1" branches to the optional silence and to "2".
  int branches = 0;
  for (const auto &a : g.arcs) {
    CHECK(a.from < a.to);
    if (a.from == 5) {
      branches++;
      CHECK(a.log_prob == doctest::Approx(std::log(0.4 / 2)));
    }
  }
  CHECK(branches == 2);
  CHECK(CompileGraph("12", HmmSet{}, SilencePolicy::kEndsOnly).min_length == 12);
  CHECK(CompileGraph("12", HmmSet{}, SilencePolicy::kOptionalBetween).states ==
        CompileGraph("12", HmmSet{}, SilencePolicy::kOptionalBetween).states);
}

TEST_CASE("single-state graph") {
  StateGraph g = LinearGraph({4}, {0.7});
  Matrix e = TwoStateEmissions({-1.0, -2.0, -0.5, -3.0}, {0, 0, 0, 0}, 4, 5);
  ViterbiResult v = ViterbiAlign(g, e);
  CHECK(v.states == std::vector<int>{4, 4, 4, 4});
  AlignmentMatrix a = FbAlign(g, e);
  for (int t = 0; t < 4; t++) {
    CHECK(a.posteriors(t, 4) == 1.0);
    CHECK(a.posteriors.row(t).sum() == 1.0);
  }
}

TEST_CASE("two-state Viterbi against the three enumerated paths") {
  StateGraph g = LinearGraph({0, 1}, {0.5, 0.5});
  Matrix e = TwoStateEmissions({-1.0, -1.5, -3.0, -4.0}, {-2.0, -1.0, -0.5, -0.2}, 0, 1);
  // AAAB, AABB, ABBB; all carry 3 transition factors of 0.5.
  double paths[3] = {-1.0 - 1.5 - 3.0 - 0.2, -1.0 - 1.5 - 0.5 - 0.2, -1.0 - 1.0 - 0.5 - 0.2};
  int best = static_cast<int>(std::max_element(paths, paths + 3) - paths);
  ViterbiResult v = ViterbiAlign(g, e);
  std::vector<std::vector<int>> expected = {{0, 0, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 1}};
  CHECK(v.states == expected[best]);
  CHECK(v.log_prob == doctest::Approx(paths[best] + 3 * std::log(0.5)));
}

TEST_CASE("two-state forward-backward against brute force") {
  StateGraph g = LinearGraph({2, 7}, {0.3, 0.8});
  Matrix e = TwoStateEmissions({-0.4, -1.1, -2.5}, {-1.9, -0.6, -0.3}, 2, 7);
  // AAB: a_AA a_AB ; ABB: a_AB a_BB
  double p_aab = std::exp(-0.4 - 1.1 - 0.3) * 0.3 * 0.7;
  double p_abb = std::exp(-0.4 - 0.6 - 0.3) * 0.7 * 0.8;
  double z = p_aab + p_abb;
  double total;
  AlignmentMatrix a = FbAlign(g, e, &total);
  CHECK(std::abs(total - std::log(z)) < 1e-12);
  CHECK(std::abs(a.posteriors(0, 2) - 1.0) < 1e-10);
  CHECK(std::abs(a.posteriors(1, 2) - p_aab / z) < 1e-10);
  CHECK(std::abs(a.posteriors(1, 7) - p_abb / z) < 1e-10);
  CHECK(std::abs(a.posteriors(2, 7) - 1.0) < 1e-10);
  CHECK(a.source == AlignmentSource::kHmmFb);
}

TEST_CASE("small random instances agree with exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.05, 0.95), score(-6.0, 0.0);
  for (int trial = 0; trial < 40; trial++) {
    int k = 1 + trial % 3, frames = k + static_cast<int>(rng() % (7 - k));
    std::vector<int> states;
    std::vector<double> loops;
    for (int i = 0; i < k; i++) states.push_back(5 * i + 1), loops.push_back(unif(rng));
    StateGraph g = LinearGraph(states, loops);
    Matrix e = Matrix::Constant(frames, kNumStates, kLogZero);
    for (int t = 0; t < frames; t++)
      for (int s : states) e(t, s) = score(rng);
    oracle::EnumeratedPaths ref = oracle::EnumeratePaths(g, e);
    AlignmentMatrix fb = FbAlign(g, e);
    CHECK((fb.posteriors - ref.state_posteriors).cwiseAbs().maxCoeff() < 1e-10);
    ViterbiResult v = ViterbiAlign(g, e);
    CHECK(v.nodes == ref.best_nodes);
    CHECK(std::abs(v.log_prob - ref.best_log_prob) < 1e-10);
    // Viterbi states carry FB mass; the path never moves backwards.
    for (int t = 0; t < frames; t++) {
      CHECK(fb.posteriors(t, v.states[t]) > 0);
      if (t > 0) CHECK(v.nodes[t] >= v.nodes[t - 1]);
    }
  }
}

TEST_CASE("too-short utterances") {
  StateGraph g = CompileGraph("12345", HmmSet{}, SilencePolicy::kNone);
  Matrix e = Matrix::Zero(14, kNumStates);
  CHECK_THROWS_WITH_AS(ViterbiAlign(g, e), doctest::Contains("TooShort"), Error);
  CHECK_THROWS_WITH_AS(FbAlign(g, e), doctest::Contains("TooShort"), Error);
  CHECK_NOTHROW(FbAlign(g, Matrix::Zero(15, kNumStates)));
}

TEST_CASE("HMM training") {
  std::vector<TrainingUtterance> one = ToyCorpus(1, 4, 3);
  HmmTrainConfig cfg;
  cfg.target_components = 2;
  HmmTrainTrace trace;
  HmmSet hmms = TrainHmmSet(one, cfg, &trace);
  REQUIRE(trace.entries.size() >= 2);
  CHECK(trace.entries[1].log_likelihood >= trace.entries[0].log_likelihood);
  for (size_t i = 1; i < trace.entries.size(); i++) {
    double prev = trace.entries[i - 1].log_likelihood;
    CHECK(trace.entries[i].log_likelihood >= prev - 1e-6 * std::abs(prev));
  }
  CHECK_NOTHROW(hmms.Check());

  std::vector<TrainingUtterance> corpus = ToyCorpus(12, 3, 8);
  HmmSet full = TrainHmmSet(corpus, HmmTrainConfig{});
  int digit_mix = 0, sil_mix = 0;
  for (int s = 0; s < kNumStates; s++) (IsSilenceState(s) ? sil_mix : digit_mix) += full.NumComponents(s);
  CHECK(digit_mix == 480);
  CHECK(sil_mix == 48);

  // Determinism.
  HmmSet again = TrainHmmSet(one, cfg);
  for (int s = 0; s < kNumStates; s++) CHECK(again.states[s].gmm.means() == hmms.states[s].gmm.means());
}

TEST_CASE("training preconditions") {
  std::vector<TrainingUtterance> corpus = ToyCorpus(1, 2, 1);
  corpus[0].transcription = "01234567";
  CHECK_THROWS_WITH_AS(TrainHmmSet(corpus), doctest::Contains("MissingDigitCoverage"), Error);
  corpus = ToyCorpus(1, 2, 1);
  corpus[0].feats.frames.conservativeResize(20, 2);
  CHECK_THROWS_WITH_AS(TrainHmmSet(corpus), doctest::Contains("u0"), Error);
}

TEST_CASE("HMM mixture posteriors") {
  std::vector<TrainingUtterance> corpus = ToyCorpus(1, 2, 4);
  HmmTrainConfig cfg;
  cfg.target_components = 2;
  HmmSet hmms = TrainHmmSet(corpus, cfg);
  const FeatureSequence &feats = corpus[0].feats;
  AlignmentMatrix fb = FbAlign(hmms, CompileGraph(corpus[0].transcription, hmms), feats);
  MixturePosteriors gamma = HmmMixturePosteriors(hmms, fb, feats);
  CHECK(gamma.num_mixtures == 66);
  for (int t = 0; t < gamma.NumFrames(); t++) CHECK(std::abs(gamma.FrameMass(t) - 1.0) < 1e-6);

  // Product of the two factors, checked by direct scalar evaluation.
  int t = 10;
  for (const auto &[mix, g] : gamma.frames[t]) {
    int s = mix / 2, c = mix % 2;
    const DiagGmm &gmm = hmms.states[s].gmm;
    double den = 0.0, comp[2];
    for (int k = 0; k < 2; k++) {
      double lp = std::log(gmm.weights()(k));
      for (int d = 0; d < 2; d++)
        lp += oracle::NormalLogPdf(feats.frames(t, d), gmm.means()(k, d), gmm.variances()(k, d));
      comp[k] = std::exp(lp);
      den += comp[k];
    }
    CHECK(std::abs(g - fb.posteriors(t, s) * comp[c] / den) < 1e-10);
  }

  AlignmentMatrix dnn = fb;
  dnn.source = AlignmentSource::kDnn;
  CHECK_THROWS_WITH_AS(HmmMixturePosteriors(hmms, dnn, feats), doctest::Contains("SourceMismatch"), Error);

  // One state with two identical components splits its mass evenly.
  HmmSet sym = hmms;
  Matrix m = Matrix::Zero(2, 2), v = Matrix::Ones(2, 2);
  sym.states[3].gmm = DiagGmm(Vector::Constant(2, 0.5), m, v);
  AlignmentMatrix hard = HardAlignment(std::vector<int>(feats.NumFrames(), 3), AlignmentSource::kHmmViterbi);
  MixturePosteriors g2 = HmmMixturePosteriors(sym, hard, feats);
  CHECK(g2.frames[0].size() == 2);
  CHECK(g2.frames[0][0].second == 0.5);
  CHECK(g2.frames[0][1].second == 0.5);
}
