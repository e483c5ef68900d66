#pragma once

#include "ecpe/common.hpp"

#include <json.hpp>

#include <compare>
#include <set>
#include <string>
#include <vector>

namespace ecpe::metrics {

struct PairMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t proposed = 0;
  std::size_t correct = 0;
  std::size_t annotated = 0;
};

struct ClauseMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
};

// A pair keyed by document so pairs from different documents never collide.
struct PairKey {
  std::string doc_id;
  int emotion = 0;
  int cause = 0;

  auto operator<=>(const PairKey&) const = default;
};

// P = correct/proposed, R = correct/annotated, F1 = 2PR/(P+R); every ratio
// with a zero denominator is 0.
PairMetrics pair_metrics_from_counts(std::size_t proposed, std::size_t correct, std::size_t annotated);
PairMetrics pair_prf(const std::set<PairKey>& predicted, const std::set<PairKey>& gold);

// Pooled binary P/R/F1 over clause decisions. Throws on length mismatch.
ClauseMetrics clause_prf(const std::vector<int>& predicted, const std::vector<int>& gold);

struct EvaluationReport {
  int split = 0;
  std::string variant;
  std::string set = "test";
  ClauseMetrics emotion;
  ClauseMetrics cause;
  PairMetrics pair;
};

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation, 0 for a single split
};

// Mean and spread of each of the nine Table-1 numbers across splits.
struct AggregateReport {
  int splits = 0;
  Summary emotion_precision, emotion_recall, emotion_f1;
  Summary cause_precision, cause_recall, cause_f1;
  Summary pair_precision, pair_recall, pair_f1;
};

// Mean of per-split metrics. Requires exactly the split ids 0..expected-1;
// the error lists any that are absent.
AggregateReport aggregate_splits(const std::vector<EvaluationReport>& reports, int expected_splits);

nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const AggregateReport& aggregate);
EvaluationReport report_from_json(const nlohmann::json& j);

// {"variant", "set", "splits": [...], "aggregate": {...}}
nlohmann::json report_document(const std::vector<EvaluationReport>& reports, const AggregateReport& aggregate);

}  // namespace ecpe::metrics
