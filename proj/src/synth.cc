// src/synth.cc

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

#include "dpsv/synth.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dpsv/io.h"

namespace dpsv {

TwMode ParseTwMode(const std::string &name) {
  if (name == "whole_prompt") return TwMode::kWholePrompt;
  if (name == "single_digit") return TwMode::kSingleDigit;
  Fail(ErrorCode::kConfigInvalid, "unknown TW mode '", name, "'");
}

const char *TwModeName(TwMode mode) { return mode == TwMode::kWholePrompt ? "whole_prompt" : "single_digit"; }

void SynthConfig::Check() const {
  if (num_speakers < 2) Fail(ErrorCode::kConfigInvalid, "need at least 2 evaluation speakers");
  if (num_background_speakers < 2) Fail(ErrorCode::kConfigInvalid, "need at least 2 background speakers");
  if (background_utterances < 1 || enroll_utterances < 1 || test_utterances < 1)
    Fail(ErrorCode::kConfigInvalid, "utterance counts must be positive");
  if (enroll_digits < 1 || test_digits < 1) Fail(ErrorCode::kConfigInvalid, "digit string lengths must be positive");
  if (dim < 1 || fbank_dim < 1) Fail(ErrorCode::kConfigInvalid, "feature dimensions must be positive");
  if (!(state_separation > 0) || !(speaker_offset_scale >= 0) || !(speaker_state_scale >= 0) || !(noise_scale > 0))
    Fail(ErrorCode::kConfigInvalid, "scales must be positive");
  if (speaker_rank < 1) Fail(ErrorCode::kConfigInvalid, "speaker rank must be positive");
  if (dwell_min < 2 || dwell_max < dwell_min) Fail(ErrorCode::kConfigInvalid, "dwell range must satisfy 2 <= min <= max");
  if (silence_min < 1 || silence_max < silence_min) Fail(ErrorCode::kConfigInvalid, "bad silence range");
}

std::string CorruptPrompt(const std::string &digits, TwMode mode, std::uint64_t seed) {
  std::vector<int> parsed = ParseDigits(digits);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> digit(0, 9);
  std::string out(parsed.size(), '0');
  for (size_t i = 0; i < parsed.size(); i++) out[i] = static_cast<char>('0' + parsed[i]);
  const std::string original = out;
  if (mode == TwMode::kSingleDigit) {
    std::uniform_int_distribution<size_t> pos(0, out.size() - 1);
    std::uniform_int_distribution<int> shift(1, 9);
    size_t p = pos(rng);
    out[p] = static_cast<char>('0' + (out[p] - '0' + shift(rng)) % 10);
    return out;
  }
  do {
    for (char &c : out) c = static_cast<char>('0' + digit(rng));
  } while (out == original);
  return out;
}

namespace {

class Generator {
 public:
  explicit Generator(const SynthConfig &cfg) : cfg_(cfg), rng_(cfg.seed) {
    std::normal_distribution<double> normal(0.0, 1.0);
    // Two independent draws differ by sqrt(2) sigma per dimension, so this
    // puts the expected distance between state means at state_separation.
    double sigma = cfg.state_separation / std::sqrt(2.0 * cfg.dim);
    state_means_.resize(kNumStates, cfg.dim);
    for (Eigen::Index i = 0; i < state_means_.size(); i++) state_means_.data()[i] = sigma * normal(rng_);
    std::mt19937_64 map_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    fbank_map_.resize(cfg.fbank_dim, cfg.dim);
    for (Eigen::Index i = 0; i < fbank_map_.size(); i++)
      fbank_map_.data()[i] = normal(map_rng) / std::sqrt(static_cast<double>(cfg.dim));
    // Loadings are scaled so each offset entry has variance
    // speaker_offset_scale^2 + speaker_state_scale^2.
    std::mt19937_64 load_rng(cfg.seed ^ 0xbf58476d1ce4e5b9ull);
    const double unit = 1.0 / std::sqrt(static_cast<double>(cfg.speaker_rank));
    global_loading_.resize(cfg.dim, cfg.speaker_rank);
    for (Eigen::Index i = 0; i < global_loading_.size(); i++)
      global_loading_.data()[i] = cfg.speaker_offset_scale * unit * normal(load_rng);
    state_loading_.resize(kNumStates * cfg.dim, cfg.speaker_rank);
    for (Eigen::Index i = 0; i < state_loading_.size(); i++)
      state_loading_.data()[i] = cfg.speaker_state_scale * unit * normal(load_rng);
  }

  // One offset row per state: a global vector plus a state-dependent part,
  // both driven by the same low-dimensional speaker factor.
  Matrix SpeakerOffset() {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector factor(cfg_.speaker_rank);
    for (int k = 0; k < cfg_.speaker_rank; k++) factor(k) = normal(rng_);
    Vector global = global_loading_ * factor, local = state_loading_ * factor;
    Matrix out(kNumStates, cfg_.dim);
    for (int s = 0; s < kNumStates; s++)
      out.row(s) = global.transpose() + local.segment(static_cast<Eigen::Index>(s) * cfg_.dim, cfg_.dim).transpose();
    if (!cfg_.silence_offset) out.bottomRows(kNumStates - kNumDigitStates).setZero();
    return out;
  }

  std::string Digits(int n) {
    std::uniform_int_distribution<int> digit(0, 9);
    std::string s(n, '0');
    for (char &c : s) c = static_cast<char>('0' + digit(rng_));
    return s;
  }

  // `count` strings of length `n` whose union covers every digit.
  std::vector<std::string> CoveringSet(int count, int n) {
    while (true) {
      std::vector<std::string> out;
      bool seen[10] = {};
      for (int i = 0; i < count; i++) {
        out.push_back(Digits(n));
        for (char c : out.back()) seen[c - '0'] = true;
      }
      if (std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; })) return out;
    }
  }

  SynthUtterance Utterance(const std::string &id, const std::string &speaker, const std::string &set,
                           const std::string &prompt, const std::string &spoken, const Matrix &offset) {
    SynthUtterance u;
    u.id = id;
    u.speaker = speaker;
    u.set = set;
    u.digits = prompt;
    u.spoken = spoken;
    std::uniform_int_distribution<int> dwell(cfg_.dwell_min, cfg_.dwell_max);
    std::uniform_int_distribution<int> sil(cfg_.silence_min, cfg_.silence_max);
    auto add_word = [&](int word, bool silence) {
      for (int k = 0; k < kStatesPerWord; k++) {
        int n = silence ? sil(rng_) : dwell(rng_);
        u.states.insert(u.states.end(), n, word * kStatesPerWord + k);
      }
    };
    add_word(kSilenceWord, true);
    for (char c : spoken) add_word(c - '0', false);
    add_word(kSilenceWord, true);
    std::normal_distribution<double> normal(0.0, cfg_.noise_scale);
    const int num_frames = static_cast<int>(u.states.size());
    u.mfcc.kind = FeatureKind::kMfcc60;
    u.mfcc.frames.resize(num_frames, cfg_.dim);
    for (int t = 0; t < num_frames; t++) {
      u.mfcc.frames.row(t) = state_means_.row(u.states[t]) + offset.row(u.states[t]);
      for (int d = 0; d < cfg_.dim; d++) u.mfcc.frames(t, d) += normal(rng_);
    }
    // Quantize to what the feature files store so in-memory and on-disk
    // corpora are identical.
    u.mfcc.frames = u.mfcc.frames.cast<float>().cast<double>();
    u.fbank.kind = FeatureKind::kFbank120;
    u.fbank.frames = (u.mfcc.frames * fbank_map_.transpose()).cast<float>().cast<double>();
    return u;
  }

  std::mt19937_64 &rng() { return rng_; }

 private:
  const SynthConfig &cfg_;
  std::mt19937_64 rng_;
  Matrix state_means_;
  Matrix fbank_map_;
  Matrix global_loading_;  // D x rank
  Matrix state_loading_;   // (S*D) x rank
};

std::string Id(const char *fmt, int a, int b) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

}  // namespace

SynthCorpus GenerateCorpus(const SynthConfig &cfg) {
  cfg.Check();
  Generator gen(cfg);
  SynthCorpus corpus;
  for (int s = 0; s < cfg.num_background_speakers; s++) {
    std::string spk = Id("bg%03d", s, 0);
    Matrix offset = gen.SpeakerOffset();
    std::vector<std::string> prompts = gen.CoveringSet(cfg.background_utterances, cfg.enroll_digits);
    for (int u = 0; u < cfg.background_utterances; u++)
      corpus.utterances.push_back(gen.Utterance(Id("bg%03d_u%02d", s, u), spk, "train", prompts[u], prompts[u], offset));
  }
  struct TestPair {
    std::string speaker, correct, wrong, prompt;
  };
  std::vector<TestPair> tests;
  std::vector<std::string> speakers;
  for (int s = 0; s < cfg.num_speakers; s++) {
    std::string spk = Id("spk%03d", s, 0);
    speakers.push_back(spk);
    Matrix offset = gen.SpeakerOffset();
    std::vector<std::string> prompts = gen.CoveringSet(cfg.enroll_utterances, cfg.enroll_digits);
    for (int u = 0; u < cfg.enroll_utterances; u++)
      corpus.utterances.push_back(gen.Utterance(Id("spk%03d_enr%d", s, u), spk, "enroll", prompts[u], prompts[u], offset));
    for (int u = 0; u < cfg.test_utterances; u++) {
      std::string prompt = gen.Digits(cfg.test_digits);
      std::string wrong = CorruptPrompt(prompt, cfg.tw_mode, gen.rng()());
      TestPair pair{spk, Id("spk%03d_tst%02d", s, u), Id("spk%03d_tsw%02d", s, u), prompt};
      corpus.utterances.push_back(gen.Utterance(pair.correct, spk, "test", prompt, prompt, offset));
      corpus.utterances.push_back(gen.Utterance(pair.wrong, spk, "test", prompt, wrong, offset));
      tests.push_back(pair);
    }
  }
  for (const std::string &spk : speakers) {
    for (const TestPair &p : tests) {
      bool target = p.speaker == spk;
      corpus.trials.push_back({spk, p.correct, p.prompt, target ? TrialCategory::kTC : TrialCategory::kIC});
      corpus.trials.push_back({spk, p.wrong, p.prompt, target ? TrialCategory::kTW : TrialCategory::kIW});
    }
  }
  return corpus;
}

void WriteCorpus(const SynthCorpus &corpus, const std::string &dir) {
  namespace fs = std::filesystem;
  for (const char *sub : {"feats/mfcc", "feats/fbank", "transcripts", "trials"})
    fs::create_directories(fs::path(dir) / sub);
  std::string transcripts[3];
  std::string utt2spk;
  for (const SynthUtterance &u : corpus.utterances) {
    WriteFeatures((fs::path(dir) / "feats/mfcc" / (u.id + ".dvfe")).string(), u.mfcc);
    WriteFeatures((fs::path(dir) / "feats/fbank" / (u.id + ".dvfe")).string(), u.fbank);
    int k = u.set == "train" ? 0 : u.set == "enroll" ? 1 : 2;
    transcripts[k] += u.id + " " + u.digits + "\n";
    utt2spk += u.id + " " + u.speaker + "\n";
  }
  std::string trials;
  for (const TrialRecord &t : corpus.trials) trials += FormatTrial(t) + "\n";
  WriteFile((fs::path(dir) / "transcripts/train.txt").string(), transcripts[0]);
  WriteFile((fs::path(dir) / "transcripts/enroll.txt").string(), transcripts[1]);
  WriteFile((fs::path(dir) / "transcripts/test.txt").string(), transcripts[2]);
  WriteFile((fs::path(dir) / "utt2spk.txt").string(), utt2spk);
  WriteFile((fs::path(dir) / "trials/trials.txt").string(), trials);
}

}  // namespace dpsv
