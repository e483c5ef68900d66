#include "ecpe/training.hpp"

#include <cmath>
#include <numeric>

namespace ecpe::training {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(dropout > 0.0 && dropout <= 1.0) && dropout_is_keep_prob) throw ConfigError("keep probability must lie in (0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0) && !dropout_is_keep_prob) throw ConfigError("drop probability must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be nonnegative");
  if (!(init_bound > 0.0)) throw ConfigError("init_bound must be positive");
  weights.validate();
}

namespace {

void accumulate(model::LossBreakdown& acc, const model::LossBreakdown& x) {
  acc.emotion += x.emotion;
  acc.cause += x.cause;
  acc.pair_positive += x.pair_positive;
  acc.pair_negative += x.pair_negative;
  acc.pair += x.pair;
  acc.total += x.total;
  acc.l2 += x.l2;
  acc.n_clauses += x.n_clauses;
  acc.n_positive += x.n_positive;
  acc.n_negative += x.n_negative;
}

void scale(model::LossBreakdown& acc, double s) {
  acc.emotion *= s;
  acc.cause *= s;
  acc.pair_positive *= s;
  acc.pair_negative *= s;
  acc.pair *= s;
  acc.total *= s;
  acc.l2 *= s;
}

}  // namespace

TrainState train(model::Model& model, const std::vector<model::EncodedDocument>& train_docs,
                 const std::vector<model::EncodedDocument>& val_docs, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
  config.validate();
  if (train_docs.empty()) throw ValidationError("train: no training documents");

  TrainState state;
  Adam optimizer(config.learning_rate);
  std::vector<Matrix> best;
  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffler(mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(order);

    EpochRecord record;
    record.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<model::EncodedDocument> group;
      for (std::size_t k = start; k < stop; ++k) group.push_back(train_docs[order[k]]);
      const model::Batch batch = model::make_batch(group);

      model.params().zero_grad();
      model::DropoutConfig dropout{config.keep_probability(),
                                   mix_seed(config.seed, (static_cast<std::uint64_t>(epoch) << 32) + static_cast<std::uint64_t>(batches))};
      model::LossBreakdown loss;
      try {
        loss = model.forward_backward(batch, config.weights, config.l2, dropout);
      } catch (const Error& e) {
        throw TrainingDiverged(std::string("epoch ") + std::to_string(epoch) + ": " + e.what(), state);
      }
      optimizer.step(model.params());
      accumulate(record.loss, loss);
      ++batches;
    }
    scale(record.loss, 1.0 / batches);

    if (!val_docs.empty()) {
      record.has_validation = true;
      record.validation = evaluate(model, val_docs, config.threshold, config.batch_size).report;
      record.validation.set = "val";
      if (record.validation.pair.f1 > state.best_val_pair_f1) {
        state.best_val_pair_f1 = record.validation.pair.f1;
        state.best_epoch = epoch;
        best = model.params().snapshot();
      }
    } else {
      state.best_epoch = epoch;
    }
    state.history.push_back(record);
    state.epochs_completed = epoch;
    if (on_epoch) on_epoch(record);
  }
  if (!best.empty()) model.params().restore(best);
  return state;
}

Evaluation evaluate(const model::Model& model, const std::vector<model::EncodedDocument>& docs, double threshold,
                    int batch_size) {
  Evaluation out;
  std::vector<int> emotion_pred, emotion_gold, cause_pred, cause_gold;
  std::set<metrics::PairKey> predicted, gold;
  for (std::size_t start = 0; start < docs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(docs.size(), start + static_cast<std::size_t>(batch_size));
    const auto group = std::span<const model::EncodedDocument>(docs).subspan(start, stop - start);
    auto outputs = model.predict(model::make_batch(group));
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      const auto& doc = group[k];
      const auto& o = outputs[k];
      for (int i = 0; i < doc.size(); ++i) {
        const auto si = static_cast<std::size_t>(i);
        emotion_pred.push_back(o.emotion[si][1] > threshold ? 1 : 0);
        cause_pred.push_back(o.cause[si][1] > threshold ? 1 : 0);
        emotion_gold.push_back(doc.emotion[si]);
        cause_gold.push_back(doc.cause[si]);
      }
      for (const auto& [i, j] : pairing::extract_pairs(o.pair_probability(), threshold)) predicted.insert({doc.doc_id, i, j});
      for (const auto& [i, j] : doc.pairs) gold.insert({doc.doc_id, i, j});
      out.outputs.push_back(std::move(outputs[k]));
    }
  }
  out.report.variant = encoder::to_string(model.config().variant.variant);
  out.report.emotion = metrics::clause_prf(emotion_pred, emotion_gold);
  out.report.cause = metrics::clause_prf(cause_pred, cause_gold);
  out.report.pair = metrics::pair_prf(predicted, gold);
  return out;
}

ParameterCount count_trainable_params(const model::Model& model) {
  ParameterCount c;
  c.with_embeddings = model.count_trainable(true);
  c.without_embeddings = model.count_trainable(false);
  return c;
}

nlohmann::json to_json(const ParameterCount& c) {
  return {{"trainable_with_embeddings", c.with_embeddings},
          {"trainable_without_embeddings", c.without_embeddings},
          {"reference_e2e_pext_e", c.reference}};
}

nlohmann::json epoch_log_record(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"L_e", r.loss.emotion},
                      {"L_c", r.loss.cause},
                      {"L_pos", r.loss.pair_positive},
                      {"L_neg", r.loss.pair_negative},
                      {"L_p", r.loss.pair},
                      {"L_total", r.loss.total},
                      {"L2", r.loss.l2}};
  if (r.has_validation) {
    const auto& v = r.validation;
    j["val_pair_p"] = v.pair.precision;
    j["val_pair_r"] = v.pair.recall;
    j["val_pair_f1"] = v.pair.f1;
    j["val_pair_proposed"] = v.pair.proposed;
    j["val_emotion_f1"] = v.emotion.f1;
    j["val_cause_p"] = v.cause.precision;
    j["val_cause_r"] = v.cause.recall;
    j["val_cause_f1"] = v.cause.f1;
  }
  return j;
}

}  // namespace ecpe::training
