#pragma once

#include "ecpe/common.hpp"
#include "ecpe/params.hpp"

#include <span>
#include <string>
#include <vector>

namespace ecpe::encoder {

// Standard LSTM, gate rows ordered input, forget, candidate, output:
//   z = W x_t + U h_{t-1} + b
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
class Lstm {
 public:
  struct Cache {
    Matrix input;   // in x T
    Matrix gates;   // 4H x T, post-activation
    Matrix cells;   // H x T
    Matrix hidden;  // H x T
  };

  Lstm() = default;
  Lstm(ParameterStore& store, const std::string& prefix, int input_size, int hidden_size);

  Matrix forward(const Matrix& input, Cache* cache) const;
  // Accumulates parameter gradients; returns d input.
  Matrix backward(const Matrix& d_hidden, const Cache& cache);

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }

 private:
  Parameter* W_ = nullptr;
  Parameter* U_ = nullptr;
  Parameter* b_ = nullptr;
  int input_size_ = 0;
  int hidden_size_ = 0;
};

// Forward and backward LSTMs over the same sequence; output column t is
// [h_fwd(t); h_bwd(t)].
class BiLstm {
 public:
  struct Cache {
    Lstm::Cache fwd;
    Lstm::Cache bwd;
  };

  BiLstm() = default;
  BiLstm(ParameterStore& store, const std::string& prefix, int input_size, int hidden_size);

  Matrix forward(const Matrix& input, Cache* cache) const;
  Matrix backward(const Matrix& d_output, const Cache& cache);

  int input_size() const { return fwd_.input_size(); }
  int output_size() const { return 2 * fwd_.hidden_size(); }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

// Additive attention pooling: score_t = v . tanh(W h_t + b). Columns at or
// beyond `length` are padding and receive zero weight.
class AttentionPool {
 public:
  struct Cache {
    Matrix states;     // D x T
    Matrix projected;  // A x T, post-tanh
    Vector weights;    // T
    int length = 0;
  };

  AttentionPool() = default;
  AttentionPool(ParameterStore& store, const std::string& prefix, int state_size, int attention_size);

  Vector forward(const Matrix& states, int length, Cache* cache) const;
  Matrix backward(const Vector& d_pooled, const Cache& cache);

 private:
  Parameter* W_ = nullptr;
  Parameter* b_ = nullptr;
  Parameter* v_ = nullptr;
};

// Word embeddings -> BiLSTM -> attention pooling, yielding the clause vector.
class WordEncoder {
 public:
  struct Cache {
    std::vector<int> ids;
    Matrix dropout_mask;  // empty when dropout is off
    BiLstm::Cache rnn;
    AttentionPool::Cache attention;
  };

  WordEncoder() = default;
  WordEncoder(ParameterStore& store, int vocab_size, int embed_dim, int hidden_size, int attention_size);

  // `ids` may carry trailing PAD (0) entries; the recurrent pass covers the
  // leading non-PAD prefix and attention masks the rest.
  Vector encode(std::span<const int> ids, const Matrix* dropout_mask, Cache* cache) const;
  void backward(const Vector& d_clause, const Cache& cache);

  int embed_dim() const { return embed_dim_; }
  int output_size() const { return rnn_.output_size(); }
  Parameter& embeddings() { return *embed_; }

 private:
  Parameter* embed_ = nullptr;
  BiLstm rnn_;
  AttentionPool attention_;
  int embed_dim_ = 0;
};

// softmax(W r + b) over two classes.
class SoftmaxHead {
 public:
  SoftmaxHead() = default;
  SoftmaxHead(ParameterStore& store, const std::string& weight_name, const std::string& bias_name,
              int input_size);

  Dist2 logits(const Vector& r) const;
  Dist2 predict(const Vector& r) const { return softmax2(logits(r)); }
  Matrix logits(const Matrix& r) const;  // 2 x n
  // Accumulates gradients for d logits (2 x n); returns d r.
  Matrix backward(const Matrix& d_logits, const Matrix& r);

 private:
  Parameter* W_ = nullptr;
  Parameter* b_ = nullptr;
};

// Softmax Jacobian-vector product for a two-class distribution.
inline Dist2 softmax2_backward(const Dist2& probs, const Dist2& d_probs) {
  return (probs.array() * (d_probs.array() - probs.dot(d_probs))).matrix();
}

enum class Variant { PExtE, PExtC, CExt, EExt };

std::string to_string(Variant v);
// Accepts "pext-e", "PExt_E", "E2E-PExt_E" and the like.
Variant parse_variant(const std::string& text);

struct VariantConfig {
  Variant variant = Variant::PExtE;
  bool gold_labels_available = false;
  bool detach_signal = false;
};

enum class Task { Emotion, Cause };

struct DataflowEdge {
  std::string from;
  std::string to;
};

struct DataflowPlan {
  Variant variant = Variant::PExtE;
  Task first = Task::Emotion;      // runs on s_i alone
  Task second = Task::Cause;       // runs on s_i (+) signal from `first`
  bool signal_is_gold = false;     // true labels replace the first task's predictions
  bool labels_in_pair = false;     // true labels join the pair representation
  bool detach_signal = false;
  std::vector<DataflowEdge> edges;

  bool has_edge(const std::string& from, const std::string& to) const;
  // The task whose reported predictions are the injected true labels.
  bool reports_gold(Task t) const { return signal_is_gold && t == first; }
};

DataflowPlan wire_variant(const VariantConfig& config);

// Single-operation entry points over a clause sequence (columns = clauses).
Matrix encode_emotion_context(const BiLstm& encoder, const Matrix& clause_vectors);
Matrix encode_cause_context(const BiLstm& encoder, const Matrix& clause_vectors, const Matrix& emotion_signal);
inline Dist2 predict_emotion(const SoftmaxHead& head, const Vector& r) { return head.predict(r); }
inline Dist2 predict_cause(const SoftmaxHead& head, const Vector& r) { return head.predict(r); }

}  // namespace ecpe::encoder
