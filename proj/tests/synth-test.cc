// tests/synth-test.cc

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

#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "dpsv/hmm.h"
#include "dpsv/io.h"
#include "dpsv/synth.h"

using namespace dpsv;

namespace {

SynthConfig Tiny() {
  SynthConfig cfg;
  cfg.num_speakers = 3;
  cfg.num_background_speakers = 2;
  cfg.background_utterances = 3;
  cfg.dim = 5;
  cfg.fbank_dim = 7;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  SynthCorpus a = GenerateCorpus(Tiny()), b = GenerateCorpus(Tiny());
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); i++) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(a.utterances[i].mfcc.frames == b.utterances[i].mfcc.frames);
    CHECK(a.utterances[i].fbank.frames == b.utterances[i].fbank.frames);
  }
  SynthConfig other = Tiny();
  other.seed = 43;
  CHECK(GenerateCorpus(other).utterances[0].mfcc.frames != a.utterances[0].mfcc.frames);
}

TEST_CASE("prompt corruption") {
  for (std::uint64_t seed = 0; seed < 200; seed++) {
    std::string whole = CorruptPrompt("12345", TwMode::kWholePrompt, seed);
    CHECK(whole.size() == 5);
    CHECK(whole != "12345");
    CHECK(ParseDigits(whole).size() == 5);
    std::string single = CorruptPrompt("12345", TwMode::kSingleDigit, seed);
    int changed = 0;
    for (int i = 0; i < 5; i++) changed += single[i] != "12345"[i];
    CHECK(changed == 1);
  }
  CHECK(CorruptPrompt("0000", TwMode::kWholePrompt, 3) == CorruptPrompt("0000", TwMode::kWholePrompt, 3));
  CHECK(ParseTwMode("single_digit") == TwMode::kSingleDigit);
  CHECK_THROWS_AS(ParseTwMode("shuffle"), Error);
}

TEST_CASE("corpus structure") {
  SynthConfig cfg = Tiny();
  SynthCorpus c = GenerateCorpus(cfg);
  std::map<std::string, std::set<char>> seen;
  std::map<std::string, int> per_set;
  for (const SynthUtterance &u : c.utterances) {
    per_set[u.set]++;
    if (u.set != "test") CHECK(u.digits == u.spoken);
    for (char d : u.spoken) seen[u.set + u.speaker].insert(d);
    // Silence, three states per spoken digit in order, silence.
    std::vector<int> runs;
    for (size_t t = 0; t < u.states.size(); t++)
      if (t == 0 || u.states[t] != u.states[t - 1]) runs.push_back(u.states[t]);
    REQUIRE(runs.size() == 3 * (u.spoken.size() + 2));
    for (size_t w = 0; w < u.spoken.size(); w++)
      for (int k = 0; k < 3; k++) CHECK(runs[3 + 3 * w + k] == 3 * (u.spoken[w] - '0') + k);
    CHECK(runs.front() == 30);
    CHECK(runs.back() == 32);
    CHECK(static_cast<int>(u.states.size()) >= 6 * cfg.silence_min + 3 * cfg.dwell_min * static_cast<int>(u.spoken.size()));
    CHECK(u.mfcc.NumFrames() == static_cast<int>(u.states.size()));
    CHECK(u.fbank.Dim() == cfg.fbank_dim);
  }
  CHECK(per_set["train"] == 6);
  CHECK(per_set["enroll"] == 9);
  CHECK(per_set["test"] == 24);
  for (const auto &[key, digits] : seen)
    if (key.rfind("test", 0) != 0) CHECK(digits.size() == 10);

  CHECK(c.trials.size() == 2u * 3 * 3 * 4);
  std::map<TrialCategory, int> count;
  for (const TrialRecord &t : c.trials) count[t.category]++;
  CHECK(count[TrialCategory::kTC] == 12);
  CHECK(count[TrialCategory::kTW] == 12);
  CHECK(count[TrialCategory::kIC] == 24);
}

TEST_CASE("written corpus reads back") {
  SynthCorpus c = GenerateCorpus(Tiny());
  std::string dir = (std::filesystem::temp_directory_path() / "dpsv-synth-test").string();
  std::filesystem::remove_all(dir);
  WriteCorpus(c, dir);
  const SynthUtterance &u = c.utterances[4];
  CHECK(ReadFeatures(dir + "/feats/mfcc/" + u.id + ".dvfe").frames == u.mfcc.frames);
  CHECK(ReadTrials(dir + "/trials/trials.txt").size() == c.trials.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid configurations") {
  SynthConfig cfg = Tiny();
  cfg.dwell_min = 0;
  CHECK_THROWS_AS(GenerateCorpus(cfg), Error);
  cfg = Tiny();
  cfg.test_digits = 0;
  CHECK_THROWS_AS(GenerateCorpus(cfg), Error);
}
