#include "ecpe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace ecpe::metrics {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Summary summarize(const std::vector<EvaluationReport>& reports, const std::function<double(const EvaluationReport&)>& get) {
  Summary s;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) s.mean += get(r);
  s.mean /= n;
  if (reports.size() > 1) {
    double ss = 0.0;
    for (const auto& r : reports) ss += (get(r) - s.mean) * (get(r) - s.mean);
    s.stdev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

json triple(double p, double r, double f) { return {{"precision", p}, {"recall", r}, {"f1", f}}; }

json summary_triple(const Summary& p, const Summary& r, const Summary& f, bool mean) {
  return mean ? triple(p.mean, r.mean, f.mean) : triple(p.stdev, r.stdev, f.stdev);
}

ClauseMetrics clause_from_json(const json& j) {
  ClauseMetrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.true_positive = j.value("tp", std::size_t{0});
  m.false_positive = j.value("fp", std::size_t{0});
  m.false_negative = j.value("fn", std::size_t{0});
  return m;
}

}  // namespace

PairMetrics pair_metrics_from_counts(std::size_t proposed, std::size_t correct, std::size_t annotated) {
  PairMetrics m;
  m.proposed = proposed;
  m.correct = correct;
  m.annotated = annotated;
  m.precision = ratio(correct, proposed);
  m.recall = ratio(correct, annotated);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

PairMetrics pair_prf(const std::set<PairKey>& predicted, const std::set<PairKey>& gold) {
  std::size_t correct = 0;
  for (const auto& p : predicted) correct += gold.count(p);
  return pair_metrics_from_counts(predicted.size(), correct, gold.size());
}

ClauseMetrics clause_prf(const std::vector<int>& predicted, const std::vector<int>& gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("clause_prf: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(gold.size()) + " gold labels");
  }
  ClauseMetrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] && gold[i]) ++m.true_positive;
    if (predicted[i] && !gold[i]) ++m.false_positive;
    if (!predicted[i] && gold[i]) ++m.false_negative;
  }
  m.precision = ratio(m.true_positive, m.true_positive + m.false_positive);
  m.recall = ratio(m.true_positive, m.true_positive + m.false_negative);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

AggregateReport aggregate_splits(const std::vector<EvaluationReport>& reports, int expected_splits) {
  std::vector<int> seen(static_cast<std::size_t>(std::max(expected_splits, 0)), 0);
  for (const auto& r : reports) {
    if (r.split < 0 || r.split >= expected_splits) {
      throw ValidationError("aggregate_splits: unexpected split id " + std::to_string(r.split));
    }
    if (seen[static_cast<std::size_t>(r.split)]++) {
      throw ValidationError("aggregate_splits: split " + std::to_string(r.split) + " reported twice");
    }
  }
  std::string missing;
  for (int k = 0; k < expected_splits; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) missing += (missing.empty() ? "" : ", ") + std::to_string(k);
  }
  if (!missing.empty()) throw ValidationError("aggregate_splits: missing splits " + missing);

  AggregateReport a;
  a.splits = expected_splits;
  a.emotion_precision = summarize(reports, [](const auto& r) { return r.emotion.precision; });
  a.emotion_recall = summarize(reports, [](const auto& r) { return r.emotion.recall; });
  a.emotion_f1 = summarize(reports, [](const auto& r) { return r.emotion.f1; });
  a.cause_precision = summarize(reports, [](const auto& r) { return r.cause.precision; });
  a.cause_recall = summarize(reports, [](const auto& r) { return r.cause.recall; });
  a.cause_f1 = summarize(reports, [](const auto& r) { return r.cause.f1; });
  a.pair_precision = summarize(reports, [](const auto& r) { return r.pair.precision; });
  a.pair_recall = summarize(reports, [](const auto& r) { return r.pair.recall; });
  a.pair_f1 = summarize(reports, [](const auto& r) { return r.pair.f1; });
  return a;
}

json to_json(const EvaluationReport& r) {
  json emotion = triple(r.emotion.precision, r.emotion.recall, r.emotion.f1);
  emotion["tp"] = r.emotion.true_positive;
  emotion["fp"] = r.emotion.false_positive;
  emotion["fn"] = r.emotion.false_negative;
  json cause = triple(r.cause.precision, r.cause.recall, r.cause.f1);
  cause["tp"] = r.cause.true_positive;
  cause["fp"] = r.cause.false_positive;
  cause["fn"] = r.cause.false_negative;
  json pair = triple(r.pair.precision, r.pair.recall, r.pair.f1);
  pair["proposed"] = r.pair.proposed;
  pair["correct"] = r.pair.correct;
  pair["annotated"] = r.pair.annotated;
  return {{"split", r.split}, {"variant", r.variant}, {"set", r.set},
          {"emotion", emotion}, {"cause", cause}, {"pair", pair}};
}

json to_json(const AggregateReport& a) {
  json out;
  out["splits"] = a.splits;
  for (bool mean : {true, false}) {
    json block;
    block["emotion"] = summary_triple(a.emotion_precision, a.emotion_recall, a.emotion_f1, mean);
    block["cause"] = summary_triple(a.cause_precision, a.cause_recall, a.cause_f1, mean);
    block["pair"] = summary_triple(a.pair_precision, a.pair_recall, a.pair_f1, mean);
    out[mean ? "mean" : "stdev"] = std::move(block);
  }
  return out;
}

EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  try {
    r.split = j.at("split").get<int>();
    r.variant = j.value("variant", std::string());
    r.set = j.value("set", std::string("test"));
    r.emotion = clause_from_json(j.at("emotion"));
    r.cause = clause_from_json(j.at("cause"));
    const auto& p = j.at("pair");
    r.pair = pair_metrics_from_counts(p.at("proposed").get<std::size_t>(), p.at("correct").get<std::size_t>(),
                                      p.at("annotated").get<std::size_t>());
  } catch (const json::exception& e) {
    throw Error(std::string("bad evaluation report: ") + e.what());
  }
  return r;
}

json report_document(const std::vector<EvaluationReport>& reports, const AggregateReport& aggregate) {
  json out;
  out["variant"] = reports.empty() ? "" : reports.front().variant;
  out["set"] = reports.empty() ? "" : reports.front().set;
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  out["splits"] = std::move(arr);
  out["aggregate"] = to_json(aggregate);
  return out;
}

}  // namespace ecpe::metrics
