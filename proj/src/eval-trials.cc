// src/eval-trials.cc

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

#include "dpsv/eval-trials.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "dpsv/hmm.h"

namespace dpsv {

TrialCategory ParseCategory(const std::string &name) {
  if (name == "TC") return TrialCategory::kTC;
  if (name == "TW") return TrialCategory::kTW;
  if (name == "IC") return TrialCategory::kIC;
  if (name == "IW") return TrialCategory::kIW;
  Fail(ErrorCode::kUnknownCondition, "unknown trial category '", name, "'");
}

const char *CategoryName(TrialCategory category) {
  switch (category) {
    case TrialCategory::kTC: return "TC";
    case TrialCategory::kTW: return "TW";
    case TrialCategory::kIC: return "IC";
    case TrialCategory::kIW: return "IW";
  }
  return "?";
}

std::vector<TrialRecord> ParseTrials(std::istream &in, const std::string &source) {
  std::vector<TrialRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first) || first[0] == '#') continue;
    TrialRecord r;
    r.speaker = first;
    std::string category, extra;
    if (!(fields >> r.utterance >> r.digits >> category) || (fields >> extra))
      Fail(ErrorCode::kParseError, source, ":", line_no, ": expected 4 fields");
    try {
      ParseDigits(r.digits);
      r.category = ParseCategory(category);
    } catch (const Error &e) {
      Fail(e.code(), source, ":", line_no, ": ", e.what());
    }
    out.push_back(r);
  }
  return out;
}

std::vector<TrialRecord> ReadTrials(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open ", path);
  return ParseTrials(in, path);
}

std::string FormatTrial(const TrialRecord &t) {
  return t.speaker + " " + t.utterance + " " + t.digits + " " + CategoryName(t.category);
}

Condition ParseCondition(const std::string &name) {
  std::string n = name;
  for (char &c : n) c = static_cast<char>(c == '_' ? '-' : std::toupper(static_cast<unsigned char>(c)));
  if (n == "TC-IC") return Condition::kTcIc;
  if (n == "TC-TW") return Condition::kTcTw;
  if (n == "TC-IW") return Condition::kTcIw;
  Fail(ErrorCode::kUnknownCondition, "unknown condition '", name, "'");
}

const char *ConditionName(Condition condition) {
  switch (condition) {
    case Condition::kTcIc: return "TC-IC";
    case Condition::kTcTw: return "TC-TW";
    case Condition::kTcIw: return "TC-IW";
  }
  return "?";
}

std::vector<TrialRecord> PartitionTrials(const std::vector<TrialRecord> &trials, Condition condition) {
  TrialCategory other = condition == Condition::kTcIc   ? TrialCategory::kIC
                        : condition == Condition::kTcTw ? TrialCategory::kTW
                                                        : TrialCategory::kIW;
  std::vector<TrialRecord> out;
  for (const TrialRecord &t : trials)
    if (t.category == TrialCategory::kTC || t.category == other) out.push_back(t);
  return out;
}

int ScoreSet::NumTargets() const { return static_cast<int>(std::count(target.begin(), target.end(), true)); }
int ScoreSet::NumNonTargets() const { return static_cast<int>(target.size()) - NumTargets(); }

std::string TrialKey(const std::string &speaker, const std::string &utterance) { return speaker + " " + utterance; }

ScoreSet BuildScoreSet(const std::vector<TrialRecord> &trials, const std::map<std::string, double> &scores) {
  ScoreSet out;
  for (const TrialRecord &t : trials) {
    auto it = scores.find(TrialKey(t.speaker, t.utterance));
    if (it == scores.end()) Fail(ErrorCode::kParseError, "no score for trial ", t.speaker, " ", t.utterance);
    out.scores.push_back(it->second);
    out.target.push_back(t.IsTarget());
  }
  return out;
}

std::map<std::string, double> ParseScores(std::istream &in, const std::string &source) {
  std::map<std::string, double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    std::istringstream fields(line);
    std::string spk, utt, value, extra;
    if (!(fields >> spk) || spk[0] == '#') continue;
    if (!(fields >> utt >> value) || (fields >> extra))
      Fail(ErrorCode::kParseError, source, ":", line_no, ": expected 3 fields");
    double score;
    try {
      size_t used = 0;
      score = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception &) {
      Fail(ErrorCode::kParseError, source, ":", line_no, ": bad score '", value, "'");
    }
    if (!std::isfinite(score)) Fail(ErrorCode::kParseError, source, ":", line_no, ": non-finite score");
    if (!out.emplace(TrialKey(spk, utt), score).second)
      Fail(ErrorCode::kParseError, source, ":", line_no, ": duplicate trial ", spk, " ", utt);
  }
  return out;
}

std::map<std::string, double> ReadScores(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open ", path);
  return ParseScores(in, path);
}

namespace {

struct OperatingPoint {
  double miss, fa;
};

// Operating points for thresholds at every distinct score plus +inf, in
// increasing threshold order (miss rises, false alarm falls).
std::vector<OperatingPoint> Roc(const ScoreSet &s) {
  if (s.scores.size() != s.target.size()) Fail(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  const int nt = s.NumTargets(), nn = s.NumNonTargets();
  if (nt == 0 || nn == 0) Fail(ErrorCode::kOneClassOnly, "need both target and non-target trials");
  std::vector<std::pair<double, bool>> sorted;
  for (size_t i = 0; i < s.scores.size(); i++) sorted.push_back({s.scores[i], s.target[i]});
  std::sort(sorted.begin(), sorted.end());
  std::vector<OperatingPoint> out;
  int misses = 0, accepted_nontargets = nn;
  size_t i = 0;
  while (i < sorted.size()) {
    out.push_back({static_cast<double>(misses) / nt, static_cast<double>(accepted_nontargets) / nn});
    double value = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == value) {
      if (sorted[i].second) misses++; else accepted_nontargets--;
      i++;
    }
  }
  out.push_back({static_cast<double>(misses) / nt, static_cast<double>(accepted_nontargets) / nn});
  return out;
}

}  // namespace

double ComputeEer(const ScoreSet &scores) {
  std::vector<OperatingPoint> roc = Roc(scores);
  for (size_t k = 0; k + 1 < roc.size(); k++) {
    double d1 = roc[k].miss - roc[k].fa, d2 = roc[k + 1].miss - roc[k + 1].fa;
    if (d1 <= 0 && d2 >= 0) {
      if (d1 == d2) return roc[k].miss;
      double a = d1 / (d1 - d2);
      return roc[k].miss + a * (roc[k + 1].miss - roc[k].miss);
    }
  }
  return 0.0;  // unreachable: the first point has d <= 0 and the last d >= 0
}

void DcfParams::Check() const {
  if (!(c_miss > 0 && c_fa > 0 && p_target > 0 && p_target < 1))
    Fail(ErrorCode::kConfigInvalid, "DCF parameters must be positive with p_target < 1");
}

DcfParams ParseDcfParams(const std::string &name) {
  if (name == "sre08" || name == "SRE08") return DcfParams::Sre08();
  if (name == "sre10" || name == "SRE10") return DcfParams::Sre10();
  Fail(ErrorCode::kConfigInvalid, "unknown DCF parameter set '", name, "'");
}

double ComputeMinDcf(const ScoreSet &scores, const DcfParams &params) {
  params.Check();
  std::vector<OperatingPoint> roc = Roc(scores);
  double a = params.c_miss * params.p_target, b = params.c_fa * (1.0 - params.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (const OperatingPoint &p : roc) best = std::min(best, a * p.miss + b * p.fa);
  return best / std::min(a, b);
}

std::string FormatReport(const std::vector<ReportRow> &rows, const std::vector<std::string> &dcf_names) {
  size_t width = 6;
  for (const ReportRow &r : rows) width = std::max(width, r.system.size());
  std::string out;
  char buf[64];
  auto cell = [&](const std::string &s, size_t w) {
    out += s;
    out.append(w > s.size() ? w - s.size() : 0, ' ');
  };
  cell("system", width + 2);
  cell("cond", 8);
  cell("EER(%)", 9);
  for (const std::string &n : dcf_names) cell("minDCF" + n.substr(n.size() >= 2 ? n.size() - 2 : 0), 11);
  out += '\n';
  for (const ReportRow &r : rows) {
    cell(r.system, width + 2);
    cell(ConditionName(r.condition), 8);
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * r.eer);
    cell(buf, 9);
    for (double d : r.min_dcf) {
      std::snprintf(buf, sizeof(buf), "%.4f", d);
      cell(buf, 11);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

}  // namespace dpsv
