// tests/cli-test.cc

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
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dpsv/cli.h"
#include "dpsv/eval-trials.h"
#include "dpsv/io.h"

using namespace dpsv;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run Call(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  int code = CliMain(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Scratch(const std::string &name) {
  std::filesystem::path p = std::filesystem::temp_directory_path() / ("dpsv-cli-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

void Put(const std::string &path, const std::string &text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(Call({}).code == 1);
  CHECK(Call({"frobnicate"}).code == 1);
  Run missing = Call({"train-hmm", "--list", "x.txt"});
  CHECK(missing.code == 1);
  CHECK(missing.out.empty());
  CHECK_FALSE(missing.err.empty());
  CHECK(Call({"synth", "--out", "/tmp/x", "--speakers", "many"}).code == 1);
}

TEST_CASE("data errors exit with 2") {
  std::string dir = Scratch("data");
  Run r = Call({"train-hmm", "--feats-dir", dir, "--list", dir + "/missing.txt", "--out", dir + "/hmm.dvmd"});
  CHECK(r.code == 2);
  CHECK(r.err.find("missing.txt") != std::string::npos);
  CHECK(Call({"synth", "--out", dir + "/c", "--speakers", "0"}).code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate prints a report on standard output") {
  std::string dir = Scratch("eval");
  Put(dir + "/trials.txt",
      "s1 a 123 TC\ns1 b 123 TC\ns1 c 123 TC\ns1 d 123 IC\ns1 e 123 IC\ns1 f 123 IC\n");
  Put(dir + "/scores.txt", "s1 a 0.2\ns1 b 0.7\ns1 c 0.9\ns1 d 0.1\ns1 e 0.5\ns1 f 0.8\n");
  Run r = Call({"evaluate", "--scores", dir + "/scores.txt", "--trials", dir + "/trials.txt", "--system", "toy"});
  CHECK(r.code == 0);
  CHECK(r.out.find("toy") != std::string::npos);
  CHECK(r.out.find("33.33") != std::string::npos);
  CHECK(r.out.find("progress") == std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config file values yield to flags") {
  std::string dir = Scratch("config");
  Put(dir + "/synth.ini", "speakers = 2\ntest-utterances = 1\nbackground-speakers = 2\nbackground-utterances = 2\n");
  Run r = Call({"synth", "--config", dir + "/synth.ini", "--speakers", "3", "--out", dir + "/corpus"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("progress") != std::string::npos);
  std::vector<TrialRecord> trials = ReadTrials(dir + "/corpus/trials/trials.txt");
  CHECK(trials.size() == 2u * 3 * 3 * 1);
  std::filesystem::remove_all(dir);
}
