#pragma once

#include "ecpe/loss.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/model.hpp"

#include <json.hpp>

#include <functional>
#include <vector>

namespace ecpe::training {

struct TrainConfig {
  double learning_rate = 0.005;
  int batch_size = 32;
  int epochs = 15;
  // Read as a keep probability unless dropout_is_keep_prob is false, in which
  // case it is the drop probability.
  double dropout = 0.8;
  bool dropout_is_keep_prob = true;
  double l2 = 1e-5;
  double init_bound = 0.10;
  std::uint64_t seed = 1;
  double threshold = pairing::kDecisionThreshold;
  LossWeights weights;

  void validate() const;
  double keep_probability() const { return dropout_is_keep_prob ? dropout : 1.0 - dropout; }
};

struct EpochRecord {
  int epoch = 0;
  model::LossBreakdown loss;  // means over the epoch's batches
  bool has_validation = false;
  metrics::EvaluationReport validation;
};

struct TrainState {
  int epochs_completed = 0;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_pair_f1 = -1.0;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainState state) : Error(what), state_(std::move(state)) {}
  const TrainState& state() const { return state_; }

 private:
  TrainState state_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Runs exactly config.epochs passes of Adam over shuffled batches and leaves
// the model holding the parameters of the epoch with the best validation pair
// F1 (the last epoch when `val` is empty). Deterministic given config.seed.
TrainState train(model::Model& model, const std::vector<model::EncodedDocument>& train_docs,
                 const std::vector<model::EncodedDocument>& val_docs, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

struct Evaluation {
  metrics::EvaluationReport report;
  std::vector<model::DocumentOutput> outputs;
};

Evaluation evaluate(const model::Model& model, const std::vector<model::EncodedDocument>& docs,
                    double threshold = pairing::kDecisionThreshold, int batch_size = 32);

inline void init_params(ParameterStore& store, std::uint64_t seed, double bound = 0.10) {
  store.init_uniform(bound, seed);
}

inline constexpr std::size_t kReferenceParameterCount = 790257;

struct ParameterCount {
  std::size_t with_embeddings = 0;
  std::size_t without_embeddings = 0;
  std::size_t reference = kReferenceParameterCount;
};

ParameterCount count_trainable_params(const model::Model& model);
nlohmann::json to_json(const ParameterCount& count);

nlohmann::json epoch_log_record(const EpochRecord& record);

}  // namespace ecpe::training
