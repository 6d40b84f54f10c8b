// honk/metrics.hpp
//
// Multiclass evaluation: accuracy, generalized (Gorodkin) MCC, macro
// F1/precision/recall, Cohen's kappa, and one-vs-rest macro ROC-AUC.

// Copyright 2026  The Honkpipe Authors

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

#ifndef HONK_METRICS_HPP_
#define HONK_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "honk/common.hpp"

namespace honk {

// Per-class softmax scores from one model for one input.
struct ClassProbabilities {
  std::array<double, kNumClasses> p{};
  std::string model_id;

  void validate() const {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0))
        throw MemberOutputInvalid(str_cat("metrics: negative probability from ",
                                          model_id.empty() ? "model" : model_id));
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw MemberOutputInvalid(str_cat("metrics: probabilities from ",
                                        model_id.empty() ? "model" : model_id,
                                        " sum to ", sum));
  }
};

// Ties break toward the lower class index.
inline int argmax_class(const ClassProbabilities& c) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (c.p[static_cast<size_t>(i)] > c.p[static_cast<size_t>(best)]) best = i;
  return best;
}

struct ConfusionMatrix {
  // rows = true class, cols = predicted class
  std::array<std::array<int64_t, kNumClasses>, kNumClasses> counts{};

  int64_t total() const {
    int64_t t = 0;
    for (const auto& row : counts)
      for (int64_t v : row) t += v;
    return t;
  }
  int64_t trace() const {
    int64_t t = 0;
    for (int i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
  }
  std::array<int64_t, kNumClasses> row_sums() const {
    std::array<int64_t, kNumClasses> r{};
    for (int i = 0; i < kNumClasses; ++i)
      for (int j = 0; j < kNumClasses; ++j) r[i] += counts[i][j];
    return r;
  }
  std::array<int64_t, kNumClasses> col_sums() const {
    std::array<int64_t, kNumClasses> c{};
    for (int i = 0; i < kNumClasses; ++i)
      for (int j = 0; j < kNumClasses; ++j) c[j] += counts[i][j];
    return c;
  }
};

struct MetricsReport {
  double accuracy = 0.0;
  double mcc = 0.0;
  double f1_macro = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double kappa = 0.0;
  std::optional<double> roc_auc_macro;  // null when no class has both pos and neg
};

namespace detail {

// Rank-based (Mann-Whitney) AUC with midrank tie handling.
inline double binary_auc(const std::vector<double>& scores, const std::vector<bool>& pos) {
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  int64_t n_pos = 0;
  for (size_t k = 0; k < scores.size(); ++k)
    if (pos[k]) {
      pos_rank_sum += rank[k];
      ++n_pos;
    }
  const int64_t n_neg = static_cast<int64_t>(scores.size()) - n_pos;
  return (pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
         (static_cast<double>(n_pos) * n_neg);
}

}  // namespace detail

inline ConfusionMatrix confusion_from_pairs(const std::vector<std::pair<int, int>>& true_pred) {
  ConfusionMatrix cm;
  for (auto [t, p] : true_pred) {
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
      throw RangeError(str_cat("metrics: label (", t, ",", p, ") outside 0..3"));
    ++cm.counts[static_cast<size_t>(t)][static_cast<size_t>(p)];
  }
  return cm;
}

// Metrics computable from the confusion matrix alone.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  MetricsReport r;
  const double s = static_cast<double>(cm.total());
  if (s == 0.0) throw DataError("metrics: empty evaluation");
  const double c = static_cast<double>(cm.trace());
  const auto t = cm.row_sums();
  const auto p = cm.col_sums();

  r.accuracy = c / s;

  // generalized MCC (Gorodkin)
  double tp_dot = 0.0, t2 = 0.0, p2 = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    tp_dot += static_cast<double>(t[k]) * p[k];
    t2 += static_cast<double>(t[k]) * t[k];
    p2 += static_cast<double>(p[k]) * p[k];
  }
  const double denom = std::sqrt((s * s - p2) * (s * s - t2));
  r.mcc = denom > 0.0 ? (c * s - tp_dot) / denom : 0.0;

  // Cohen's kappa
  const double po = c / s;
  const double pe = tp_dot / (s * s);
  r.kappa = pe < 1.0 ? (po - pe) / (1.0 - pe) : (po >= 1.0 ? 1.0 : 0.0);

  // macro precision/recall/F1 over the four classes, 0/0 := 0
  double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double tp = static_cast<double>(cm.counts[k][k]);
    const double prec = p[k] > 0 ? tp / p[k] : 0.0;
    const double rec = t[k] > 0 ? tp / t[k] : 0.0;
    const double f1 = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    prec_sum += prec;
    rec_sum += rec;
    f1_sum += f1;
  }
  r.precision_macro = prec_sum / kNumClasses;
  r.recall_macro = rec_sum / kNumClasses;
  r.f1_macro = f1_sum / kNumClasses;
  return r;
}

struct EvaluationResult {
  MetricsReport report;
  ConfusionMatrix confusion;
};

inline EvaluationResult evaluate(
    const std::vector<std::pair<int, ClassProbabilities>>& predictions) {
  if (predictions.empty()) throw DataError("metrics: nothing to evaluate");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(predictions.size());
  for (const auto& [truth, probs] : predictions) {
    probs.validate();
    pairs.emplace_back(truth, argmax_class(probs));
  }
  EvaluationResult res;
  res.confusion = confusion_from_pairs(pairs);
  res.report = metrics_from_confusion(res.confusion);

  // one-vs-rest macro ROC-AUC over classes with both positives and negatives
  double auc_sum = 0.0;
  int auc_classes = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    std::vector<double> scores;
    std::vector<bool> pos;
    int64_t n_pos = 0;
    for (const auto& [truth, probs] : predictions) {
      scores.push_back(probs.p[static_cast<size_t>(k)]);
      pos.push_back(truth == k);
      n_pos += (truth == k);
    }
    if (n_pos == 0 || n_pos == static_cast<int64_t>(predictions.size())) continue;
    auc_sum += detail::binary_auc(scores, pos);
    ++auc_classes;
  }
  if (auc_classes > 0) res.report.roc_auc_macro = auc_sum / auc_classes;
  return res;
}

// --- model comparison (Table-8 shape) ---

struct ComparisonRow {
  std::string name;
  MetricsReport report;
  // best-model value minus this row's value, in percentage points, keyed by
  // metric name
  std::map<std::string, double> delta_points;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // ranked by accuracy, best first
  std::string best;
};

inline std::map<std::string, double> metric_map(const MetricsReport& r) {
  std::map<std::string, double> m{
      {"accuracy", r.accuracy},   {"mcc", r.mcc},
      {"f1", r.f1_macro},         {"precision", r.precision_macro},
      {"recall", r.recall_macro}, {"kappa", r.kappa},
  };
  if (r.roc_auc_macro) m["roc_auc"] = *r.roc_auc_macro;
  return m;
}

inline ComparisonTable compare_models(
    const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  if (reports.empty()) throw DataError("metrics: nothing to compare");
  ComparisonTable table;
  for (const auto& [name, rep] : reports) table.rows.push_back({name, rep, {}});
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     return a.report.accuracy > b.report.accuracy;
                   });
  table.best = table.rows.front().name;
  const auto best = metric_map(table.rows.front().report);
  for (ComparisonRow& row : table.rows) {
    const auto own = metric_map(row.report);
    for (const auto& [k, v] : best) {
      auto it = own.find(k);
      if (it != own.end()) row.delta_points[k] = (v - it->second) * 100.0;
    }
  }
  return table;
}

// --- serialization ---

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["mcc"] = r.mcc;
  j["f1_macro"] = r.f1_macro;
  j["precision_macro"] = r.precision_macro;
  j["recall_macro"] = r.recall_macro;
  j["kappa"] = r.kappa;
  if (r.roc_auc_macro)
    j["roc_auc_macro"] = *r.roc_auc_macro;
  else
    j["roc_auc_macro"] = nullptr;
  return j;
}

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < kNumClasses; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < kNumClasses; ++j) row.push_back(cm.counts[i][j]);
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_report_table(
    const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "model" << std::right << std::setw(10) << "accuracy"
     << std::setw(8) << "mcc" << std::setw(8) << "f1" << std::setw(10) << "precision"
     << std::setw(8) << "recall" << std::setw(8) << "kappa" << std::setw(9) << "roc_auc"
     << "\n";
  os << std::string(77, '-') << "\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : reports) {
    os << std::left << std::setw(16) << name << std::right << std::setw(10) << r.accuracy
       << std::setw(8) << std::setprecision(2) << r.mcc << std::setw(8) << r.f1_macro
       << std::setw(10) << r.precision_macro << std::setw(8) << r.recall_macro
       << std::setw(8) << r.kappa;
    if (r.roc_auc_macro)
      os << std::setw(9) << *r.roc_auc_macro;
    else
      os << std::setw(9) << "n/a";
    os << std::setprecision(4) << "\n";
  }
  return os.str();
}

}  // namespace honk

#endif  // HONK_METRICS_HPP_
