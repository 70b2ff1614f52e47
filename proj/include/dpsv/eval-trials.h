// dpsv/eval-trials.h

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

#ifndef DPSV_EVAL_TRIALS_H_
#define DPSV_EVAL_TRIALS_H_

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "dpsv/base.h"

namespace dpsv {

enum class TrialCategory { kTC, kTW, kIC, kIW };

TrialCategory ParseCategory(const std::string &name);  // UnknownCondition
const char *CategoryName(TrialCategory category);

struct TrialRecord {
  std::string speaker;
  std::string utterance;
  std::string digits;  // the prompt
  TrialCategory category = TrialCategory::kTC;

  bool IsTarget() const { return category == TrialCategory::kTC; }
};

/// Parses `<speaker-id> <utt-id> <digit-string> <TC|TW|IC|IW>` lines; blank
/// lines and '#' comments are skipped. Errors name `source` and the line.
std::vector<TrialRecord> ParseTrials(std::istream &in, const std::string &source = "trials");
std::vector<TrialRecord> ReadTrials(const std::string &path);
std::string FormatTrial(const TrialRecord &trial);

enum class Condition { kTcIc, kTcTw, kTcIw };

/// Accepts "TC-IC", "TC_IC" or "tc-ic" spellings.
Condition ParseCondition(const std::string &name);
const char *ConditionName(Condition condition);

/// TC trials plus the non-target category named by the condition.
std::vector<TrialRecord> PartitionTrials(const std::vector<TrialRecord> &trials, Condition condition);

struct ScoreSet {
  std::vector<double> scores;
  std::vector<bool> target;

  int NumTargets() const;
  int NumNonTargets() const;
};

/// Trial key `<speaker-id> <utt-id>` used by score files.
std::string TrialKey(const std::string &speaker, const std::string &utterance);

/// Looks every trial up in `scores` (keyed by TrialKey); a missing score is
/// a ParseError.
ScoreSet BuildScoreSet(const std::vector<TrialRecord> &trials, const std::map<std::string, double> &scores);

/// Reads `<speaker-id> <utt-id> <score>` lines.
std::map<std::string, double> ParseScores(std::istream &in, const std::string &source = "scores");
std::map<std::string, double> ReadScores(const std::string &path);

/// Equal error rate, higher scores meaning "target". A trial is accepted at
/// threshold th when score >= th; the rate is interpolated linearly on the
/// ROC between the two operating points where miss and false alarm cross.
double ComputeEer(const ScoreSet &scores);

struct DcfParams {
  double c_miss = 10.0;
  double c_fa = 1.0;
  double p_target = 0.01;

  static DcfParams Sre08() { return {10.0, 1.0, 0.01}; }
  static DcfParams Sre10() { return {1.0, 1.0, 0.001}; }
  void Check() const;
};

DcfParams ParseDcfParams(const std::string &name);  // "sre08" | "sre10"

/// Minimum over thresholds of c_miss p P_miss + c_fa (1-p) P_fa, divided by
/// min(c_miss p, c_fa (1-p)).
double ComputeMinDcf(const ScoreSet &scores, const DcfParams &params);

struct ReportRow {
  std::string system;
  Condition condition = Condition::kTcIc;
  double eer = 0.0;
  std::vector<double> min_dcf;
};

/// Aligned table: system, condition, EER(%), one column per DCF set.
std::string FormatReport(const std::vector<ReportRow> &rows, const std::vector<std::string> &dcf_names);

}  // namespace dpsv

#endif  // DPSV_EVAL_TRIALS_H_
