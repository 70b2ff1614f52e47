// src/cli.cc

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

#include "dpsv/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "dpsv/content-kl.h"
#include "dpsv/eval-trials.h"
#include "dpsv/io.h"
#include "dpsv/synth.h"

namespace dpsv {

namespace {

namespace fs = std::filesystem;

struct ListEntry {
  std::string id;
  std::string text;
};

// Lines `<utt-id> [text]`; blank lines and '#' comments are skipped.
std::vector<ListEntry> ReadList(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open ", path);
  std::vector<ListEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    ListEntry e;
    if (!(fields >> e.id) || e.id[0] == '#') continue;
    std::getline(fields, e.text);
    size_t first = e.text.find_first_not_of(" \t");
    e.text = first == std::string::npos ? "" : e.text.substr(first);
    while (!e.text.empty() && std::isspace(static_cast<unsigned char>(e.text.back()))) e.text.pop_back();
    out.push_back(e);
  }
  return out;
}

std::vector<ListEntry> ReadLists(const std::vector<std::string> &paths) {
  std::vector<ListEntry> out;
  for (const std::string &p : paths) {
    std::vector<ListEntry> part = ReadList(p);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::map<std::string, std::string> ReadUtt2Spk(const std::string &path) {
  std::map<std::string, std::string> out;
  for (const ListEntry &e : ReadList(path)) {
    if (e.text.empty()) Fail(ErrorCode::kParseError, path, ": utterance ", e.id, " has no speaker");
    out[e.id] = e.text;
  }
  return out;
}

std::string InDir(const std::string &dir, const std::string &id, const char *ext) {
  return (fs::path(dir) / (id + ext)).string();
}

AlignmentSource SourceFor(const std::string &name, const std::string &mode) {
  if (name == "dnn") return AlignmentSource::kDnn;
  return mode == "viterbi" ? AlignmentSource::kHmmViterbi : AlignmentSource::kHmmFb;
}

class Progress {
 public:
  Progress(std::ostream &err, std::string stage) : err_(err), stage_(std::move(stage)) {}
  template <typename... Args>
  void operator()(const std::string &event, const Args &...kv) {
    err_ << "progress stage=" << stage_ << " event=" << event;
    ((err_ << ' ' << kv), ...);
    err_ << '\n';
  }

 private:
  std::ostream &err_;
  std::string stage_;
};

template <typename T>
std::string Kv(const std::string &key, const T &value) {
  std::ostringstream os;
  os.precision(10);
  os << key << '=' << value;
  return os.str();
}

std::string FormatScore(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void WriteText(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    WriteFile(path, text);
  }
}

std::vector<int> ParseIntList(const std::string &s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception &) {
      Fail(ErrorCode::kConfigInvalid, "bad integer '", item, "' in list '", s, "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string out;
  SynthConfig cfg;
  std::string tw_mode = "whole_prompt";
};

void RunSynth(const SynthOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "synth");
  SynthConfig cfg = o.cfg;
  cfg.tw_mode = ParseTwMode(o.tw_mode);
  SynthCorpus corpus = GenerateCorpus(cfg);
  progress("generated", Kv("utterances", corpus.utterances.size()), Kv("trials", corpus.trials.size()));
  WriteCorpus(corpus, o.out);
  out << "utterances " << corpus.utterances.size() << "\ntrials " << corpus.trials.size() << "\n";
}

struct ExtractOpts {
  std::string kind = "mfcc";
  std::string out_dir;
  bool cmvn = false;
  std::vector<std::string> wavs;
};

void RunExtract(const ExtractOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "extract-feats");
  if (o.kind != "mfcc" && o.kind != "fbank") Fail(ErrorCode::kConfigInvalid, "--kind must be mfcc or fbank");
  for (const std::string &wav : o.wavs) {
    AudioClip clip = ReadWav(wav);
    FeatureSequence f = o.kind == "mfcc" ? ExtractMfcc(clip) : ExtractFbank(clip);
    if (o.cmvn) f = ApplyCmvn(f);
    std::string path = InDir(o.out_dir, fs::path(wav).stem().string(), ".dvfe");
    WriteFeatures(path, f);
    progress("utterance", Kv("file", wav), Kv("frames", f.NumFrames()));
    out << path << " " << f.NumFrames() << "\n";
  }
}

struct TrainHmmOpts {
  std::string feats_dir, list, out;
  HmmTrainConfig cfg;
  std::string policy = "optional-between";
};

void RunTrainHmm(const TrainHmmOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-hmm");
  std::vector<TrainingUtterance> corpus;
  for (const ListEntry &e : ReadList(o.list))
    corpus.push_back({e.id, ReadFeatures(InDir(o.feats_dir, e.id, ".dvfe")), e.text});
  progress("loaded", Kv("utterances", corpus.size()));
  HmmTrainConfig cfg = o.cfg;
  cfg.policy = ParseSilencePolicy(o.policy);
  HmmTrainTrace trace;
  HmmSet hmms = TrainHmmSet(corpus, cfg, &trace);
  for (const auto &e : trace.entries)
    progress("pass", Kv("components", e.num_components), Kv("pass", e.pass), Kv("loglike", e.log_likelihood));
  WriteFile(o.out, EncodeModel(hmms));
  out << "wrote " << o.out << "\n";
}

struct AlignOpts {
  std::string source = "gmm-hmm", mode = "fb";
  std::string hmm, mlp, feats_dir, fbank_dir, list, out_dir;
  std::string policy = "optional-between";
  int context = 5;
};

void RunAlign(const AlignOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "align");
  const bool fb = o.mode == "fb";
  if (o.mode != "fb" && o.mode != "viterbi") Fail(ErrorCode::kConfigInvalid, "--mode must be viterbi or fb");
  if (o.source != "gmm-hmm" && o.source != "dnn" && o.source != "dnn-hmm")
    Fail(ErrorCode::kConfigInvalid, "--source must be gmm-hmm, dnn or dnn-hmm");
  HmmSet hmms;
  MlpModel mlp;
  if (o.source == "gmm-hmm" || !o.hmm.empty()) hmms = ReadWith<HmmSet>(o.hmm, DecodeHmmSet);
  if (o.source != "gmm-hmm") mlp = ReadWith<MlpModel>(o.mlp, DecodeMlp);
  SilencePolicy policy = ParseSilencePolicy(o.policy);
  int count = 0;
  for (const ListEntry &e : ReadList(o.list)) {
    AlignmentMatrix align;
    try {
      if (o.source == "dnn") {
        FeatureSequence spliced = Splice(ReadFeatures(InDir(o.fbank_dir, e.id, ".dvfe")), o.context);
        align = MlpPosteriors(mlp, spliced);
      } else {
        StateGraph graph = CompileGraph(e.text, hmms, policy);
        Matrix emissions;
        if (o.source == "gmm-hmm") {
          FeatureSequence feats = ReadFeatures(InDir(o.feats_dir, e.id, ".dvfe"));
          emissions = hmms.EmissionLogLikes(feats, graph.states);
        } else {
          FeatureSequence spliced = Splice(ReadFeatures(InDir(o.fbank_dir, e.id, ".dvfe")), o.context);
          emissions = DnnEmissionLogLikes(mlp, spliced);
        }
        if (fb) {
          align = FbAlign(graph, emissions);
        } else {
          align = HardAlignment(ViterbiAlign(graph, emissions).states, AlignmentSource::kHmmViterbi);
        }
      }
    } catch (const Error &ex) {
      throw Error(ex.code(), "utterance " + e.id + ": " + ex.detail());
    }
    WritePosteriors(InDir(o.out_dir, e.id, ".dvpo"), align);
    count++;
  }
  progress("done", Kv("utterances", count));
  out << "aligned " << count << "\n";
}

struct TrainMlpOpts {
  std::string fbank_dir, align_dir, list, out;
  std::string hidden = "512,512,512,512";
  MlpTrainConfig cfg;
  int context = 5;
};

void RunTrainMlp(const TrainMlpOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-mlp");
  std::vector<FeatureSequence> fbank;
  std::vector<std::vector<int>> labels;
  for (const ListEntry &e : ReadList(o.list)) {
    fbank.push_back(ReadFeatures(InDir(o.fbank_dir, e.id, ".dvfe")));
    labels.push_back(ArgmaxStates(ReadPosteriors(InDir(o.align_dir, e.id, ".dvpo"), AlignmentSource::kHmmFb)));
  }
  MlpTrainConfig cfg = o.cfg;
  cfg.hidden = ParseIntList(o.hidden);
  MlpTrainReport report;
  MlpModel model = TrainMlpOnUtterances(fbank, labels, o.context, cfg, &report);
  for (size_t i = 0; i < report.train_loss.size(); i++)
    progress("epoch", Kv("epoch", i + 1), Kv("train_loss", report.train_loss[i]),
             Kv("held_out_loss", report.held_out_loss[i]));
  progress("done", Kv("train_accuracy", report.train_accuracy), Kv("prior_baseline", report.prior_baseline));
  WriteFile(o.out, EncodeModel(model));
  out << "wrote " << o.out << "\n";
}

Matrix StackFrames(const std::string &feats_dir, const std::vector<ListEntry> &list) {
  std::vector<FeatureSequence> feats;
  Eigen::Index rows = 0;
  for (const ListEntry &e : list) {
    feats.push_back(ReadFeatures(InDir(feats_dir, e.id, ".dvfe")));
    rows += feats.back().NumFrames();
  }
  if (feats.empty()) Fail(ErrorCode::kTooFewSamples, "empty utterance list");
  Matrix all(rows, feats[0].Dim());
  Eigen::Index row = 0;
  for (const FeatureSequence &f : feats) {
    if (f.Dim() != all.cols()) Fail(ErrorCode::kDimMismatch, "feature files differ in dimension");
    all.middleRows(row, f.NumFrames()) = f.frames;
    row += f.NumFrames();
  }
  return all;
}

struct TrainUbmOpts {
  std::string feats_dir, list, out;
  GmmTrainConfig cfg;
};

void RunTrainUbm(const TrainUbmOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-ubm");
  Matrix all = StackFrames(o.feats_dir, ReadList(o.list));
  progress("loaded", Kv("frames", all.rows()));
  Vector floor = VarianceFloor(all, o.cfg.variance_floor);
  GmmTrainTrace trace;
  DiagGmm ubm = TrainEm(all, o.cfg, floor, &trace);
  for (const auto &e : trace.entries)
    progress("iteration", Kv("components", e.num_components), Kv("iteration", e.iteration),
             Kv("loglike", e.log_likelihood));
  WriteFile(o.out, EncodeModel(PgmmFromUbm(ubm, floor)));
  out << "wrote " << o.out << "\n";
}

struct TrainPgmmOpts {
  std::string from_hmm, align_dir, feats_dir, list, out;
  int components = 16;
  int iterations = 4;
  GmmTrainConfig cfg;
};

void RunTrainPgmm(const TrainPgmmOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-pgmm");
  Pgmm pgmm;
  if (!o.from_hmm.empty()) {
    pgmm = PgmmFromHmmSet(ReadWith<HmmSet>(o.from_hmm, DecodeHmmSet));
  } else {
    std::vector<AlignmentMatrix> aligns;
    std::vector<FeatureSequence> feats;
    for (const ListEntry &e : ReadList(o.list)) {
      feats.push_back(ReadFeatures(InDir(o.feats_dir, e.id, ".dvfe")));
      aligns.push_back(ReadPosteriors(InDir(o.align_dir, e.id, ".dvpo"), AlignmentSource::kDnn));
    }
    pgmm = InitPgmm(aligns, feats, o.components, o.cfg);
    for (int it = 0; it < o.iterations; it++) {
      double objective = 0.0;
      pgmm = PgmmEmStep(pgmm, aligns, feats, &objective);
      progress("iteration", Kv("iteration", it + 1), Kv("objective", objective));
    }
  }
  progress("done", Kv("states", pgmm.NumStates()), Kv("mixtures", pgmm.NumMixtures()));
  WriteFile(o.out, EncodeModel(pgmm));
  out << "wrote " << o.out << " mixtures " << pgmm.NumMixtures() << "\n";
}

// Mixture posteriors of one utterance against a background.
MixturePosteriors Gammas(const Pgmm &background, const std::string &align_dir, AlignmentSource source,
                         const std::string &id, const FeatureSequence &feats, double prune) {
  if (background.IsUbm()) return UbmMixturePosteriors(background, feats, prune);
  if (align_dir.empty()) Fail(ErrorCode::kConfigInvalid, "a phonetic background needs --align-dir");
  AlignmentMatrix align = ReadPosteriors(InDir(align_dir, id, ".dvpo"), source);
  return ComputeMixturePosteriors(background, align, feats, prune);
}

struct StatsOpts {
  std::string background, align_dir, feats_dir, out_dir;
  std::vector<std::string> lists;
  std::string source = "dnn";
  double prune = 1e-6;
};

void RunAccumulateStats(const StatsOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "accumulate-stats");
  Pgmm background = ReadWith<Pgmm>(o.background, DecodePgmm);
  const std::string id = background.Fingerprint();
  const Matrix means = background.Means();
  AlignmentSource source = SourceFor(o.source, "fb");
  int count = 0;
  for (const ListEntry &e : ReadLists(o.lists)) {
    FeatureSequence feats = ReadFeatures(InDir(o.feats_dir, e.id, ".dvfe"));
    SuffStats stats = AccumulateStats(Gammas(background, o.align_dir, source, e.id, feats, o.prune), feats, means);
    stats.background_id = id;
    WriteFile(InDir(o.out_dir, e.id, ".dvst"), EncodeStats(stats));
    count++;
  }
  progress("done", Kv("utterances", count));
  out << "accumulated " << count << "\n";
}

SuffStats ReadStatsFor(const std::string &dir, const std::string &id, const std::string &background_id) {
  SuffStats s = ReadWith<SuffStats>(InDir(dir, id, ".dvst"), DecodeStats);
  if (s.background_id != background_id)
    Fail(ErrorCode::kInconsistentBackground, "statistics of ", id, " were computed against another background");
  return s;
}

// Speakers in order of first appearance, each with its utterances.
std::vector<std::pair<std::string, std::vector<std::string>>> GroupBySpeaker(
    const std::vector<ListEntry> &list, const std::map<std::string, std::string> &utt2spk) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::map<std::string, size_t> index;
  for (const ListEntry &e : list) {
    auto it = utt2spk.find(e.id);
    if (it == utt2spk.end()) Fail(ErrorCode::kParseError, "utterance ", e.id, " has no speaker in utt2spk");
    auto [pos, inserted] = index.emplace(it->second, out.size());
    if (inserted) out.push_back({it->second, {}});
    out[pos->second].second.push_back(e.id);
  }
  return out;
}

struct EnrollOpts {
  std::string background, stats_dir, list, utt2spk, out;
  double relevance = 5.0;
};

void RunEnrollMap(const EnrollOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "enroll-map");
  Pgmm background = ReadWith<Pgmm>(o.background, DecodePgmm);
  const std::string id = background.Fingerprint();
  const Matrix means = background.Means();
  std::vector<SpeakerModel> models;
  for (const auto &[spk, utts] : GroupBySpeaker(ReadList(o.list), ReadUtt2Spk(o.utt2spk))) {
    SuffStats merged = SuffStats::Zero(static_cast<int>(means.rows()), static_cast<int>(means.cols()));
    for (const std::string &u : utts) merged.Add(ReadStatsFor(o.stats_dir, u, id));
    SpeakerModel m = MapAdapt(means, merged, o.relevance);
    m.speaker_id = spk;
    m.background_id = id;
    models.push_back(std::move(m));
    progress("speaker", Kv("speaker", spk), Kv("utterances", utts.size()), Kv("occupancy", merged.occupancy.sum()));
  }
  if (models.empty()) Fail(ErrorCode::kEmptyEnrollment, "enrollment list is empty");
  WriteFile(o.out, EncodeModel(models));
  out << "enrolled " << models.size() << "\n";
}

struct ScoreSpeakerOpts {
  std::string method = "map";
  std::string speakers, background, align_dir, feats_dir, trials, out;
  std::string source = "dnn";
  std::string backend, ivectors, enroll_list, utt2spk;
  double prune = 1e-6;
};

void RunScoreSpeaker(const ScoreSpeakerOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "score-speaker");
  std::vector<TrialRecord> trials = ReadTrials(o.trials);
  std::string text;
  if (o.method == "map") {
    Pgmm background = ReadWith<Pgmm>(o.background, DecodePgmm);
    const std::string id = background.Fingerprint();
    const Matrix means = background.Means(), vars = background.Variances();
    std::map<std::string, SpeakerModel> models;
    for (SpeakerModel &m : ReadWith<std::vector<SpeakerModel>>(o.speakers, DecodeSpeakers)) {
      if (m.background_id != id)
        Fail(ErrorCode::kInconsistentBackground, "speaker ", m.speaker_id, " was enrolled on another background");
      models.emplace(m.speaker_id, std::move(m));
    }
    AlignmentSource source = SourceFor(o.source, "fb");
    std::map<std::string, std::pair<FeatureSequence, MixturePosteriors>> cache;
    for (const TrialRecord &t : trials) {
      auto it = models.find(t.speaker);
      if (it == models.end()) Fail(ErrorCode::kParseError, "trial speaker ", t.speaker, " is not enrolled");
      auto hit = cache.find(t.utterance);
      if (hit == cache.end()) {
        FeatureSequence feats = ReadFeatures(InDir(o.feats_dir, t.utterance, ".dvfe"));
        MixturePosteriors gammas = Gammas(background, o.align_dir, source, t.utterance, feats, o.prune);
        hit = cache.emplace(t.utterance, std::make_pair(std::move(feats), std::move(gammas))).first;
      }
      const auto &[feats, gammas] = hit->second;
      text += t.speaker + " " + t.utterance + " " + FormatScore(LlrScore(it->second, means, vars, gammas, feats)) + "\n";
    }
  } else if (o.method == "plda") {
    PldaBackend backend = ReadWith<PldaBackend>(o.backend, DecodePlda);
    std::map<std::string, Vector> projected;
    for (const IVector &v : ReadWith<std::vector<IVector>>(o.ivectors, DecodeIvectors))
      projected[v.id] = ProjectIvector(backend, v.value);
    auto lookup = [&](const std::string &utt) -> const Vector & {
      auto it = projected.find(utt);
      if (it == projected.end()) Fail(ErrorCode::kParseError, "no i-vector for utterance ", utt);
      return it->second;
    };
    std::map<std::string, std::vector<Vector>> enroll;
    for (const auto &[spk, utts] : GroupBySpeaker(ReadList(o.enroll_list), ReadUtt2Spk(o.utt2spk)))
      for (const std::string &u : utts) enroll[spk].push_back(lookup(u));
    for (const TrialRecord &t : trials) {
      auto it = enroll.find(t.speaker);
      if (it == enroll.end()) Fail(ErrorCode::kEmptyEnrollment, "trial speaker ", t.speaker, " is not enrolled");
      text += t.speaker + " " + t.utterance + " " + FormatScore(PldaScore(backend, it->second, lookup(t.utterance))) + "\n";
    }
  } else {
    Fail(ErrorCode::kConfigInvalid, "--method must be map or plda");
  }
  progress("done", Kv("trials", trials.size()));
  WriteText(o.out, text, out);
}

struct TrainTvOpts {
  std::string background, stats_dir, out;
  std::vector<std::string> lists;
  TvTrainConfig cfg;
};

void RunTrainTv(const TrainTvOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-tv");
  Pgmm background = ReadWith<Pgmm>(o.background, DecodePgmm);
  const std::string id = background.Fingerprint();
  std::vector<SuffStats> stats;
  for (const ListEntry &e : ReadLists(o.lists)) stats.push_back(ReadStatsFor(o.stats_dir, e.id, id));
  std::vector<double> objective;
  TvModel tv = TrainTv(background, stats, o.cfg, &objective);
  for (size_t i = 0; i < objective.size(); i++) progress("iteration", Kv("iteration", i), Kv("objective", objective[i]));
  WriteFile(o.out, EncodeModel(tv));
  out << "wrote " << o.out << "\n";
}

struct ExtractIvectorOpts {
  std::string tv, stats_dir, out;
  std::vector<std::string> lists;
};

void RunExtractIvector(const ExtractIvectorOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "extract-ivector");
  TvModel tv = ReadWith<TvModel>(o.tv, DecodeTv);
  std::vector<IVector> ivectors;
  for (const ListEntry &e : ReadLists(o.lists)) {
    IVector v = ExtractIvector(ReadStatsFor(o.stats_dir, e.id, tv.background_id), tv);
    v.id = e.id;
    ivectors.push_back(std::move(v));
  }
  progress("done", Kv("ivectors", ivectors.size()));
  WriteFile(o.out, EncodeIvectors(ivectors));
  out << "extracted " << ivectors.size() << "\n";
}

struct TrainBackendOpts {
  std::string ivectors, utt2spk, out;
  BackendConfig cfg;
};

void RunTrainBackend(const TrainBackendOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "train-backend");
  std::vector<IVector> ivectors = ReadWith<std::vector<IVector>>(o.ivectors, DecodeIvectors);
  std::map<std::string, std::string> utt2spk = ReadUtt2Spk(o.utt2spk);
  std::vector<std::string> speakers;
  for (const IVector &v : ivectors) {
    auto it = utt2spk.find(v.id);
    if (it == utt2spk.end()) Fail(ErrorCode::kParseError, "i-vector ", v.id, " has no speaker in utt2spk");
    speakers.push_back(it->second);
  }
  std::vector<double> objective;
  PldaBackend backend = TrainBackend(ivectors, speakers, o.cfg, &objective);
  for (size_t i = 0; i < objective.size(); i++) progress("iteration", Kv("iteration", i), Kv("loglike", objective[i]));
  WriteFile(o.out, EncodeModel(backend));
  out << "wrote " << o.out << "\n";
}

struct ScoreContentOpts {
  std::string source = "dnn-hmm";
  std::string hmm, mlp, feats_dir, dnn_align_dir, trials, out;
  std::string level = "digit";
  std::string policy = "optional-between";
  double epsilon = 1e-5;
};

void RunScoreContent(const ScoreContentOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "score-content");
  if (o.source != "gmm-hmm" && o.source != "dnn-hmm")
    Fail(ErrorCode::kConfigInvalid, "--source must be gmm-hmm or dnn-hmm");
  PhoneticClassMap map = PhoneticClassMap::Make(ParseClassLevel(o.level));
  SilencePolicy policy = ParseSilencePolicy(o.policy);
  HmmSet hmms;
  Vector log_priors;
  if (!o.hmm.empty()) hmms = ReadWith<HmmSet>(o.hmm, DecodeHmmSet);
  if (o.source == "gmm-hmm" && o.hmm.empty()) Fail(ErrorCode::kConfigInvalid, "gmm-hmm source needs --hmm");
  if (o.source == "dnn-hmm") log_priors = ReadWith<MlpModel>(o.mlp, DecodeMlp).log_priors;
  std::vector<TrialRecord> trials = ReadTrials(o.trials);
  // Alignments depend on (utterance, prompt) only; trials sharing both reuse them.
  std::map<std::pair<std::string, std::string>, double> cache;
  std::string text;
  for (const TrialRecord &t : trials) {
    auto key = std::make_pair(t.utterance, t.digits);
    auto it = cache.find(key);
    if (it == cache.end()) {
      AlignmentMatrix dnn = ReadPosteriors(InDir(o.dnn_align_dir, t.utterance, ".dvpo"), AlignmentSource::kDnn);
      StateGraph graph = CompileGraph(t.digits, hmms, policy);
      Matrix emissions = o.source == "gmm-hmm"
                             ? hmms.EmissionLogLikes(ReadFeatures(InDir(o.feats_dir, t.utterance, ".dvfe")), graph.states)
                             : DnnEmissionLogLikes(dnn, log_priors);
      AlignmentMatrix hmm_align = FbAlign(graph, emissions);
      it = cache.emplace(key, ContentVerify(hmm_align, dnn, map, o.epsilon, 0.0).kl).first;
    }
    text += t.speaker + ":" + t.utterance + " " + FormatScore(it->second) + " " + CategoryName(t.category) + "\n";
  }
  progress("done", Kv("trials", trials.size()), Kv("alignments", cache.size()));
  WriteText(o.out, text, out);
}

struct EvaluateOpts {
  std::string kind = "speaker";
  std::string scores, trials, system = "system";
  std::vector<std::string> conditions = {"TC-IC"};
  std::vector<std::string> dcf = {"sre08", "sre10"};
};

std::map<std::string, double> ReadContentScores(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open ", path);
  std::map<std::string, double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    std::istringstream fields(line);
    std::string trial, value, label;
    if (!(fields >> trial) || trial[0] == '#') continue;
    size_t colon = trial.find(':');
    if (!(fields >> value >> label) || colon == std::string::npos)
      Fail(ErrorCode::kParseError, path, ":", line_no, ": expected `<speaker>:<utt> <kl> <label>`");
    double kl;
    try {
      kl = std::stod(value);
    } catch (const std::exception &) {
      Fail(ErrorCode::kParseError, path, ":", line_no, ": bad score '", value, "'");
    }
    // Lower KL is a better match; negate so that higher means target.
    out[TrialKey(trial.substr(0, colon), trial.substr(colon + 1))] = -kl;
  }
  return out;
}

void RunEvaluate(const EvaluateOpts &o, std::ostream &out, std::ostream &err) {
  Progress progress(err, "evaluate");
  if (o.kind != "speaker" && o.kind != "content") Fail(ErrorCode::kConfigInvalid, "--kind must be speaker or content");
  std::map<std::string, double> scores = o.kind == "speaker" ? ReadScores(o.scores) : ReadContentScores(o.scores);
  std::vector<TrialRecord> trials = ReadTrials(o.trials);
  std::vector<DcfParams> dcf;
  for (const std::string &name : o.dcf) dcf.push_back(ParseDcfParams(name));
  std::vector<ReportRow> rows;
  for (const std::string &c : o.conditions) {
    ReportRow row;
    row.system = o.system;
    row.condition = ParseCondition(c);
    ScoreSet set = BuildScoreSet(PartitionTrials(trials, row.condition), scores);
    row.eer = ComputeEer(set);
    for (const DcfParams &p : dcf) row.min_dcf.push_back(ComputeMinDcf(set, p));
    progress("condition", Kv("condition", ConditionName(row.condition)), Kv("targets", set.NumTargets()),
             Kv("nontargets", set.NumNonTargets()));
    rows.push_back(row);
  }
  out << FormatReport(rows, o.dcf);
}

// CLI11 only reads configuration files attached to the top-level app, so the
// per-subcommand --config file is expanded into `--key=value` arguments here.
// Keys given on the command line win over the file.
std::vector<std::string> ExpandConfig(const std::vector<std::string> &args) {
  std::vector<std::string> out;
  std::string file;
  for (size_t i = 0; i < args.size(); i++) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (file.empty() || out.empty()) return out;
  auto given = [&](const std::string &name) {
    for (const std::string &a : out)
      if (a == "--" + name || a.rfind("--" + name + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> expanded;
  for (const CLI::ConfigItem &item : CLI::ConfigINI().from_file(file)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == out[0])) continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    if (given(name)) continue;
    for (const std::string &v : item.inputs) expanded.push_back("--" + name + "=" + v);
  }
  out.insert(out.begin() + 1, expanded.begin(), expanded.end());
  return out;
}

}  // namespace

int CliMain(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Digit-prompted speaker and content verification toolkit", "dpsv"};
  app.require_subcommand(1);
  std::function<void()> run;
  auto config = [](CLI::App *sub) { sub->set_config("--config", "", "key=value configuration file"); };

  SynthOpts synth;
  {
    CLI::App *s = app.add_subcommand("synth", "Generate a synthetic digit corpus");
    config(s);
    s->add_option("--out", synth.out, "Output corpus directory")->required();
    s->add_option("--seed", synth.cfg.seed, "Random seed");
    s->add_option("--speakers", synth.cfg.num_speakers, "Evaluation speakers");
    s->add_option("--background-speakers", synth.cfg.num_background_speakers, "Training speakers");
    s->add_option("--background-utterances", synth.cfg.background_utterances, "Utterances per training speaker");
    s->add_option("--test-utterances", synth.cfg.test_utterances, "Test prompts per evaluation speaker");
    s->add_option("--separation", synth.cfg.state_separation, "Expected distance between state means");
    s->add_option("--speaker-offset", synth.cfg.speaker_offset_scale, "Stddev of the global speaker offset");
    s->add_option("--speaker-state-offset", synth.cfg.speaker_state_scale, "Stddev of the state-dependent speaker offset");
    s->add_option("--speaker-rank", synth.cfg.speaker_rank, "Dimension of the latent speaker factor");
    s->add_option("--noise", synth.cfg.noise_scale, "Per-dimension frame noise stddev");
    s->add_option("--dwell-min", synth.cfg.dwell_min, "Minimum frames per state");
    s->add_option("--dwell-max", synth.cfg.dwell_max, "Maximum frames per state");
    s->add_option("--tw-mode", synth.tw_mode, "whole_prompt or single_digit");
    s->callback([&] { run = [&] { RunSynth(synth, out, err); }; });
  }
  ExtractOpts extract;
  {
    CLI::App *s = app.add_subcommand("extract-feats", "Compute MFCC60 or FBANK120 features from WAV files");
    config(s);
    s->add_option("--kind", extract.kind, "mfcc or fbank");
    s->add_option("--out-dir", extract.out_dir, "Output directory")->required();
    s->add_flag("--cmvn", extract.cmvn, "Apply per-utterance mean/variance normalization");
    s->add_option("wavs", extract.wavs, "Input WAV files")->required();
    s->callback([&] { run = [&] { RunExtract(extract, out, err); }; });
  }
  TrainHmmOpts hmm;
  {
    CLI::App *s = app.add_subcommand("train-hmm", "Train whole-word GMM-HMMs");
    config(s);
    s->add_option("--feats-dir", hmm.feats_dir, "MFCC feature directory")->required();
    s->add_option("--list", hmm.list, "Transcript list `<utt-id> <digits>`")->required();
    s->add_option("--out", hmm.out, "Output model")->required();
    s->add_option("--components", hmm.cfg.target_components, "Gaussians per state");
    s->add_option("--initial-passes", hmm.cfg.initial_passes, "Re-alignment passes before mixture growth");
    s->add_option("--passes-per-size", hmm.cfg.passes_per_size, "Re-alignment passes per mixture size");
    s->add_option("--em-iterations", hmm.cfg.em_iterations_per_pass, "EM iterations per pass");
    s->add_option("--silence-policy", hmm.policy, "none, ends-only or optional-between");
    s->callback([&] { run = [&] { RunTrainHmm(hmm, out, err); }; });
  }
  TrainUbmOpts ubm;
  {
    CLI::App *s = app.add_subcommand("train-ubm", "Train an unsupervised GMM-UBM");
    config(s);
    s->add_option("--feats-dir", ubm.feats_dir, "Feature directory")->required();
    s->add_option("--list", ubm.list, "Utterance list")->required();
    s->add_option("--out", ubm.out, "Output model")->required();
    s->add_option("--components", ubm.cfg.target_components, "Number of Gaussians (power of two)");
    s->add_option("--iterations", ubm.cfg.em_iterations, "EM iterations per mixture size");
    s->add_option("--max-frames", ubm.cfg.max_frames, "Train on a seeded subset of this many frames");
    s->add_option("--seed", ubm.cfg.seed, "Random seed");
    s->callback([&] { run = [&] { RunTrainUbm(ubm, out, err); }; });
  }
  TrainMlpOpts mlp;
  {
    CLI::App *s = app.add_subcommand("train-mlp", "Train the DNN frame classifier");
    config(s);
    s->add_option("--fbank-dir", mlp.fbank_dir, "FBANK feature directory")->required();
    s->add_option("--align-dir", mlp.align_dir, "HMM alignments providing frame labels")->required();
    s->add_option("--list", mlp.list, "Utterance list")->required();
    s->add_option("--out", mlp.out, "Output model")->required();
    s->add_option("--hidden", mlp.hidden, "Comma-separated hidden layer widths");
    s->add_option("--epochs", mlp.cfg.epochs, "Training epochs");
    s->add_option("--learning-rate", mlp.cfg.learning_rate, "Initial learning rate");
    s->add_option("--batch-size", mlp.cfg.batch_size, "Mini-batch size");
    s->add_option("--context", mlp.context, "Spliced frames on either side");
    s->add_option("--seed", mlp.cfg.seed, "Random seed");
    s->callback([&] { run = [&] { RunTrainMlp(mlp, out, err); }; });
  }
  AlignOpts align;
  {
    CLI::App *s = app.add_subcommand("align", "Compute frame alignments");
    config(s);
    s->add_option("--source", align.source, "gmm-hmm, dnn or dnn-hmm");
    s->add_option("--mode", align.mode, "viterbi or fb");
    s->add_option("--hmm", align.hmm, "GMM-HMM model (transitions for dnn-hmm)");
    s->add_option("--mlp", align.mlp, "DNN model");
    s->add_option("--feats-dir", align.feats_dir, "MFCC feature directory");
    s->add_option("--fbank-dir", align.fbank_dir, "FBANK feature directory");
    s->add_option("--list", align.list, "Transcript list `<utt-id> <digits>`")->required();
    s->add_option("--out-dir", align.out_dir, "Output directory for DVPO files")->required();
    s->add_option("--silence-policy", align.policy, "none, ends-only or optional-between");
    s->add_option("--context", align.context, "Spliced frames on either side");
    s->callback([&] { run = [&] { RunAlign(align, out, err); }; });
  }
  TrainPgmmOpts pgmm;
  {
    CLI::App *s = app.add_subcommand("train-pgmm", "Train a phonetic GMM under fixed alignments");
    config(s);
    s->add_option("--from-hmm", pgmm.from_hmm, "Take the digit-state GMMs of this HMM set instead");
    s->add_option("--align-dir", pgmm.align_dir, "Alignment directory");
    s->add_option("--feats-dir", pgmm.feats_dir, "Feature directory");
    s->add_option("--list", pgmm.list, "Utterance list");
    s->add_option("--out", pgmm.out, "Output model")->required();
    s->add_option("--components", pgmm.components, "Gaussians per state");
    s->add_option("--iterations", pgmm.iterations, "EM iterations after initialization");
    s->callback([&] { run = [&] { RunTrainPgmm(pgmm, out, err); }; });
  }
  StatsOpts stats;
  {
    CLI::App *s = app.add_subcommand("accumulate-stats", "Write Baum-Welch statistics per utterance");
    config(s);
    s->add_option("--background", stats.background, "Background model (PGMM or UBM)")->required();
    s->add_option("--align-dir", stats.align_dir, "Alignment directory (not used with a UBM)");
    s->add_option("--source", stats.source, "Alignment source: gmm-hmm, dnn or dnn-hmm");
    s->add_option("--feats-dir", stats.feats_dir, "Feature directory")->required();
    s->add_option("--list", stats.lists, "Utterance list (repeatable)")->required();
    s->add_option("--out-dir", stats.out_dir, "Output directory for DVST files")->required();
    s->add_option("--prune", stats.prune, "Drop posteriors below this value");
    s->callback([&] { run = [&] { RunAccumulateStats(stats, out, err); }; });
  }
  EnrollOpts enroll;
  {
    CLI::App *s = app.add_subcommand("enroll-map", "MAP-adapt one speaker model per enrolled speaker");
    config(s);
    s->add_option("--background", enroll.background, "Background model")->required();
    s->add_option("--stats-dir", enroll.stats_dir, "Statistics directory")->required();
    s->add_option("--list", enroll.list, "Enrollment utterance list")->required();
    s->add_option("--utt2spk", enroll.utt2spk, "Utterance to speaker map")->required();
    s->add_option("--relevance", enroll.relevance, "Relevance factor");
    s->add_option("--out", enroll.out, "Output speaker models")->required();
    s->callback([&] { run = [&] { RunEnrollMap(enroll, out, err); }; });
  }
  ScoreSpeakerOpts score;
  {
    CLI::App *s = app.add_subcommand("score-speaker", "Score speaker verification trials");
    config(s);
    s->add_option("--method", score.method, "map or plda");
    s->add_option("--trials", score.trials, "Trial list")->required();
    s->add_option("--speakers", score.speakers, "Speaker models (map)");
    s->add_option("--background", score.background, "Background model (map)");
    s->add_option("--align-dir", score.align_dir, "Test alignments (map with a phonetic background)");
    s->add_option("--source", score.source, "Alignment source: gmm-hmm, dnn or dnn-hmm");
    s->add_option("--feats-dir", score.feats_dir, "Feature directory (map)");
    s->add_option("--backend", score.backend, "PLDA backend (plda)");
    s->add_option("--ivectors", score.ivectors, "I-vector archive with enrollment and test vectors (plda)");
    s->add_option("--enroll-list", score.enroll_list, "Enrollment utterance list (plda)");
    s->add_option("--utt2spk", score.utt2spk, "Utterance to speaker map (plda)");
    s->add_option("--out", score.out, "Score file (default: standard output)");
    s->add_option("--prune", score.prune, "Drop posteriors below this value");
    s->callback([&] { run = [&] { RunScoreSpeaker(score, out, err); }; });
  }
  TrainTvOpts tv;
  {
    CLI::App *s = app.add_subcommand("train-tv", "Train the total variability matrix");
    config(s);
    s->add_option("--background", tv.background, "Background model")->required();
    s->add_option("--stats-dir", tv.stats_dir, "Statistics directory")->required();
    s->add_option("--list", tv.lists, "Utterance list (repeatable)")->required();
    s->add_option("--rank", tv.cfg.rank, "Subspace rank");
    s->add_option("--iterations", tv.cfg.iterations, "EM iterations");
    s->add_option("--seed", tv.cfg.seed, "Random seed");
    s->add_option("--out", tv.out, "Output model")->required();
    s->callback([&] { run = [&] { RunTrainTv(tv, out, err); }; });
  }
  ExtractIvectorOpts ivec;
  {
    CLI::App *s = app.add_subcommand("extract-ivector", "Extract i-vectors");
    config(s);
    s->add_option("--tv", ivec.tv, "Total variability model")->required();
    s->add_option("--stats-dir", ivec.stats_dir, "Statistics directory")->required();
    s->add_option("--list", ivec.lists, "Utterance list (repeatable)")->required();
    s->add_option("--out", ivec.out, "Output DVIV archive")->required();
    s->callback([&] { run = [&] { RunExtractIvector(ivec, out, err); }; });
  }
  TrainBackendOpts backend;
  {
    CLI::App *s = app.add_subcommand("train-backend", "Train LDA and PLDA on labelled i-vectors");
    config(s);
    s->add_option("--ivectors", backend.ivectors, "Training i-vectors")->required();
    s->add_option("--utt2spk", backend.utt2spk, "Utterance to speaker map")->required();
    s->add_option("--lda-dim", backend.cfg.lda_dim, "LDA output dimension");
    s->add_option("--iterations", backend.cfg.plda_iterations, "PLDA EM iterations");
    s->add_option("--out", backend.out, "Output backend")->required();
    s->callback([&] { run = [&] { RunTrainBackend(backend, out, err); }; });
  }
  ScoreContentOpts content;
  {
    CLI::App *s = app.add_subcommand("score-content", "KL content scores of HMM vs DNN alignments");
    config(s);
    s->add_option("--source", content.source, "HMM side: gmm-hmm or dnn-hmm");
    s->add_option("--hmm", content.hmm, "GMM-HMM model");
    s->add_option("--mlp", content.mlp, "DNN model (priors for dnn-hmm)");
    s->add_option("--feats-dir", content.feats_dir, "MFCC feature directory (gmm-hmm)");
    s->add_option("--dnn-align-dir", content.dnn_align_dir, "DNN posteriors of the test utterances")->required();
    s->add_option("--trials", content.trials, "Trial list")->required();
    s->add_option("--level", content.level, "digit or state");
    s->add_option("--epsilon", content.epsilon, "Smoothing constant");
    s->add_option("--silence-policy", content.policy, "none, ends-only or optional-between");
    s->add_option("--out", content.out, "Score file (default: standard output)");
    s->callback([&] { run = [&] { RunScoreContent(content, out, err); }; });
  }
  EvaluateOpts eval;
  {
    CLI::App *s = app.add_subcommand("evaluate", "EER and minDCF per trial condition");
    config(s);
    s->add_option("--kind", eval.kind, "speaker or content scores");
    s->add_option("--scores", eval.scores, "Score file")->required();
    s->add_option("--trials", eval.trials, "Trial list")->required();
    s->add_option("--condition", eval.conditions, "TC-IC, TC-TW or TC-IW (repeatable)");
    s->add_option("--dcf", eval.dcf, "sre08 or sre10 (repeatable)");
    s->add_option("--system", eval.system, "System label for the report");
    s->callback([&] { run = [&] { RunEvaluate(eval, out, err); }; });
  }

  try {
    std::vector<std::string> expanded = ExpandConfig(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "usage error: " << e.what() << "\n";
    const CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }
  try {
    run();
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int CliMain(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return CliMain(args, std::cout, std::cerr);
}

}  // namespace dpsv
