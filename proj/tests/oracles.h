// tests/oracles.h

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

// Brute-force reference computations used by the unit and acceptance tests.
// Nothing here calls into the code paths being checked.

#ifndef DPSV_TESTS_ORACLES_H_
#define DPSV_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dpsv/hmm.h"

namespace dpsv::oracle {

struct EnumeratedPaths {
  Matrix state_posteriors;  // T x 33
  std::vector<int> best_nodes;
  double best_log_prob = -std::numeric_limits<double>::infinity();
  double total_prob = 0.0;
};

// Enumerates every node sequence through `graph` (self loops and arcs,
// starting at an entry, ending at an exit) and accumulates probabilities in
// the linear domain.
inline EnumeratedPaths EnumeratePaths(const StateGraph &graph, const Matrix &emissions) {
  const int num_frames = static_cast<int>(emissions.rows());
  EnumeratedPaths out;
  out.state_posteriors = Matrix::Zero(num_frames, kNumStates);
  std::vector<int> path;
  std::vector<std::pair<std::vector<int>, double>> complete;
  std::function<void(int, double)> extend = [&](int node, double log_prob) {
    path.push_back(node);
    double lp = log_prob + emissions(static_cast<Eigen::Index>(path.size()) - 1, graph.states[node]);
    if (static_cast<int>(path.size()) == num_frames) {
      if (graph.is_exit[node]) complete.push_back({path, lp});
    } else {
      extend(node, lp + graph.self_log_prob[node]);
      for (const auto &arc : graph.arcs)
        if (arc.from == node) extend(arc.to, lp + arc.log_prob);
    }
    path.pop_back();
  };
  for (int e : graph.entries) extend(e, 0.0);
  for (const auto &[nodes, lp] : complete) {
    double p = std::exp(lp);
    out.total_prob += p;
    if (lp > out.best_log_prob) {
      out.best_log_prob = lp;
      out.best_nodes = nodes;
    }
  }
  for (const auto &[nodes, lp] : complete) {
    double w = std::exp(lp) / out.total_prob;
    for (int t = 0; t < num_frames; t++) out.state_posteriors(t, graph.states[nodes[t]]) += w;
  }
  return out;
}

struct RocPoint {
  double miss;
  double fa;
};

// Counts misses and false alarms at every distinct score and at +inf,
// scanning all trials for each threshold.
inline std::vector<RocPoint> SweepThresholds(const std::vector<double> &scores, const std::vector<bool> &target) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::vector<RocPoint> out;
  for (double th : thresholds) {
    double nt = 0, nn = 0, miss = 0, fa = 0;
    for (size_t i = 0; i < scores.size(); i++) {
      if (target[i]) {
        nt++;
        if (scores[i] < th) miss++;
      } else {
        nn++;
        if (scores[i] >= th) fa++;
      }
    }
    out.push_back({miss / nt, fa / nn});
  }
  return out;
}

// Linear interpolation on the first ROC segment where miss - fa turns
// nonnegative.
inline double SweepEer(const std::vector<double> &scores, const std::vector<bool> &target) {
  std::vector<RocPoint> roc = SweepThresholds(scores, target);
  for (size_t k = 0; k + 1 < roc.size(); k++) {
    double d1 = roc[k].miss - roc[k].fa, d2 = roc[k + 1].miss - roc[k + 1].fa;
    if (d1 <= 0 && d2 >= 0) return d1 == d2 ? roc[k].miss : roc[k].miss + d1 / (d1 - d2) * (roc[k + 1].miss - roc[k].miss);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double SweepMinDcf(const std::vector<double> &scores, const std::vector<bool> &target, double c_miss,
                          double c_fa, double p_target) {
  double best = std::numeric_limits<double>::infinity();
  for (const RocPoint &p : SweepThresholds(scores, target))
    best = std::min(best, c_miss * p_target * p.miss + c_fa * (1 - p_target) * p.fa);
  return best / std::min(c_miss * p_target, c_fa * (1 - p_target));
}

inline double NormalLogPdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
}

}  // namespace dpsv::oracle

#endif  // DPSV_TESTS_ORACLES_H_
