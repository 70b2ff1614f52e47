// dpsv/synth.h

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

#ifndef DPSV_SYNTH_H_
#define DPSV_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpsv/eval-trials.h"
#include "dpsv/features.h"

namespace dpsv {

enum class TwMode { kWholePrompt, kSingleDigit };

TwMode ParseTwMode(const std::string &name);
const char *TwModeName(TwMode mode);

struct SynthConfig {
  int num_speakers = 20;             // evaluation speakers
  int num_background_speakers = 30;  // speakers used only for model training
  int background_utterances = 8;     // ten-digit utterances per background speaker
  int enroll_utterances = 3;
  int enroll_digits = 10;
  int test_utterances = 4;           // prompts per evaluation speaker
  int test_digits = 5;
  int dim = 60;
  int fbank_dim = 120;
  double state_separation = 4.0;     // expected distance between state means, in noise units
  double speaker_offset_scale = 0.12;  // global part of the speaker offset
  double speaker_state_scale = 0.2;    // state-dependent part
  int speaker_rank = 30;               // dimension of the latent speaker factor
  bool silence_offset = false;         // whether silence frames carry the speaker offset
  double noise_scale = 1.0;
  int dwell_min = 2;
  int dwell_max = 6;
  int silence_min = 3;               // frames per silence state at each edge
  int silence_max = 6;
  TwMode tw_mode = TwMode::kWholePrompt;
  std::uint64_t seed = 42;

  void Check() const;
};

struct SynthUtterance {
  std::string id;
  std::string speaker;
  std::string set;     // "train", "enroll" or "test"
  std::string digits;  // the prompt (for test utterances it may differ from the content)
  std::string spoken;  // what was actually synthesized
  FeatureSequence mfcc;
  FeatureSequence fbank;
  std::vector<int> states;  // generating state of every frame
};

struct SynthCorpus {
  std::vector<SynthUtterance> utterances;
  std::vector<TrialRecord> trials;
};

/// Frames are canonical state mean + speaker offset + Gaussian noise in the
/// MFCC space; the FBANK stream is a fixed random linear image of the same
/// frames. Every test prompt is recorded twice by its speaker, once as
/// prompted and once with corrupted content; the second recording backs the
/// TW and IW trials.
SynthCorpus GenerateCorpus(const SynthConfig &cfg);

/// Writes feats/{mfcc,fbank}/<utt>.dvfe, transcripts/{train,enroll,test}.txt
/// (`<utt-id> <prompt>`), utt2spk.txt and trials/trials.txt under `dir`.
void WriteCorpus(const SynthCorpus &corpus, const std::string &dir);

/// whole_prompt: a resampled string of the same length that differs from
/// the input; single_digit: one position replaced by a different digit.
std::string CorruptPrompt(const std::string &digits, TwMode mode, std::uint64_t seed);

}  // namespace dpsv

#endif  // DPSV_SYNTH_H_
