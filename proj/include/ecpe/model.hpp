#pragma once

#include "ecpe/common.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/encoder.hpp"
#include "ecpe/loss.hpp"
#include "ecpe/pairing.hpp"
#include "ecpe/params.hpp"
#include "ecpe/vocab.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ecpe::model {

struct ModelConfig {
  int vocab_size = 2;
  int embed_dim = corpus::kEmbeddingDim;
  int word_hidden = 100;     // per direction
  int attention_dim = 200;
  int clause_hidden = 100;   // per direction
  int pos_dim = 50;
  int pair_hidden = 100;
  int pair_depth = 2;
  int clip_distance = pairing::kClipDistance;
  bool use_positional = true;
  encoder::VariantConfig variant;

  void validate() const;
  int pair_input_size() const;
};

struct Caps {
  int max_clauses = 30;
  int max_tokens = 40;
};

struct TruncationStats {
  int documents = 0;  // documents that lost clauses
  int clauses = 0;    // clauses that lost tokens
  int pairs = 0;      // gold pairs dropped with truncated clauses
};

// A document mapped to token ids, with clause labels derived from its pairs.
struct EncodedDocument {
  std::string doc_id;
  std::vector<std::vector<int>> clauses;
  std::vector<int> emotion;
  std::vector<int> cause;
  std::set<ClausePair> pairs;

  int size() const { return static_cast<int>(clauses.size()); }
};

EncodedDocument encode_document(const corpus::Document& doc, const corpus::Vocabulary& vocab, const Caps& caps = {},
                                TruncationStats* stats = nullptr);
std::vector<EncodedDocument> encode_documents(const std::vector<corpus::Document>& docs,
                                              const corpus::Vocabulary& vocab, const Caps& caps = {},
                                              TruncationStats* stats = nullptr);

// Fixed-shape view over a group of documents. Padded clause slots hold PAD
// tokens and zero labels; padded pair cells are masked out.
struct Batch {
  int max_clauses = 0;
  int max_tokens = 0;
  std::vector<std::string> doc_ids;
  std::vector<int> clause_counts;
  std::vector<std::vector<int>> token_ids;  // [b] -> max_clauses * max_tokens, row-major
  std::vector<std::vector<int>> emotion;    // [b] -> max_clauses
  std::vector<std::vector<int>> cause;      // [b] -> max_clauses
  std::vector<std::vector<int>> pair_labels;           // [b] -> max_clauses^2
  std::vector<std::vector<std::uint8_t>> pair_mask;    // [b] -> max_clauses^2

  int size() const { return static_cast<int>(doc_ids.size()); }
  std::span<const int> clause_tokens(int b, int i) const;
};

// pad_clauses / pad_tokens of 0 mean "longest in the group".
Batch make_batch(std::span<const EncodedDocument> docs, int pad_clauses = 0, int pad_tokens = 0);

struct DocumentOutput {
  std::string doc_id;
  std::vector<Dist2> emotion;  // d
  std::vector<Dist2> cause;    // d
  std::vector<Dist2> pairs;    // d*d, row-major (emotion index outer)

  int size() const { return static_cast<int>(emotion.size()); }
  Matrix pair_probability() const;  // d x d positive-class probabilities
};

struct LossBreakdown {
  double emotion = 0.0;
  double cause = 0.0;
  double pair_positive = 0.0;
  double pair_negative = 0.0;
  double pair = 0.0;
  double total = 0.0;  // weighted task loss, excluding L2
  double l2 = 0.0;
  std::size_t n_clauses = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

struct DropoutConfig {
  double keep_prob = 1.0;
  std::uint64_t seed = 0;
};

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed, double init_bound = 0.10);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  const encoder::DataflowPlan& plan() const { return plan_; }
  ParameterStore& params() { return *store_; }
  const ParameterStore& params() const { return *store_; }

  void set_embeddings(const Matrix& vectors);

  // Evaluation mode: no dropout, no gradients. Safe to call concurrently.
  std::vector<DocumentOutput> predict(const Batch& batch) const;

  // Loss in evaluation mode; optionally also returns the predictions.
  LossBreakdown evaluate_loss(const Batch& batch, const training::LossWeights& weights, double l2_coefficient = 0.0,
                              std::vector<DocumentOutput>* outputs = nullptr) const;

  // Training step body: accumulates d(total + l2)/d params into the grads.
  // Word-embedding dropout is applied when dropout.keep_prob < 1.
  LossBreakdown forward_backward(const Batch& batch, const training::LossWeights& weights, double l2_coefficient,
                                 const DropoutConfig& dropout = {});

  std::size_t count_trainable(bool include_embeddings) const { return store_->count(include_embeddings); }

  // Sub-modules, exposed for focused tests.
  encoder::WordEncoder& word_encoder() { return impl_->words; }
  encoder::BiLstm& emotion_encoder() { return impl_->emotion_rnn; }
  encoder::BiLstm& cause_encoder() { return impl_->cause_rnn; }
  encoder::SoftmaxHead& emotion_head() { return impl_->emotion_head; }
  encoder::SoftmaxHead& cause_head() { return impl_->cause_head; }
  pairing::PairClassifier& pair_classifier() { return impl_->pair; }
  const pairing::PositionalTable* positional() const { return config_.use_positional ? &impl_->positional : nullptr; }

 private:
  struct Layers {
    encoder::WordEncoder words;
    encoder::BiLstm emotion_rnn;
    encoder::BiLstm cause_rnn;
    encoder::SoftmaxHead emotion_head;
    encoder::SoftmaxHead cause_head;
    pairing::PositionalTable positional;
    pairing::PairClassifier pair;
  };
  struct Trace;

  LossBreakdown run(const Batch& batch, const training::LossWeights& weights, double l2_coefficient,
                    const DropoutConfig* dropout, bool backprop, std::vector<DocumentOutput>* outputs) const;
  void forward_document(const Batch& batch, int b, Rng* dropout_rng, double keep_prob, Trace& trace) const;
  void backward_document(Trace& trace, const Matrix& d_emotion_logits, const Matrix& d_cause_logits,
                         const Matrix& d_pair_logits) const;

  ModelConfig config_;
  encoder::DataflowPlan plan_;
  std::unique_ptr<ParameterStore> store_;
  std::unique_ptr<Layers> impl_;
};

}  // namespace ecpe::model
