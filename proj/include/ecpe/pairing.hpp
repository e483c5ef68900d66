#pragma once

#include "ecpe/common.hpp"
#include "ecpe/params.hpp"

#include <optional>
#include <set>
#include <vector>

namespace ecpe::pairing {

inline constexpr int kClipDistance = 10;

// clip(j - i, -k, k) + k, in [0, 2k].
int relative_bucket(int i, int j, int k = kClipDistance);

// 2k+1 learned rows, one per clipped signed offset.
class PositionalTable {
 public:
  PositionalTable() = default;
  PositionalTable(ParameterStore& store, int dim, int clip_distance = kClipDistance);

  Vector lookup(int offset) const;
  const Matrix& rows() const { return table_->value; }
  Parameter& parameter() { return *table_; }
  int clip_distance() const { return k_; }
  int dim() const { return static_cast<int>(table_->value.cols()); }

 private:
  Parameter* table_ = nullptr;
  int k_ = kClipDistance;
};

// [r_e ⊕ r_c ⊕ pe (⊕ labels)]. Throws when the result does not have
// `expected_dim` entries (pass -1 to skip the check).
Vector pair_representation(const Vector& r_emotion, const Vector& r_cause, const Vector& positional,
                           const std::optional<Dist2>& labels = std::nullopt, Eigen::Index expected_dim = -1);

// depth 2: softmax(W2 ReLU(W1 r + b1) + b2); depth 1: softmax(W1 r + b1).
class PairClassifier {
 public:
  PairClassifier() = default;
  PairClassifier(ParameterStore& store, int input_size, int hidden_size, int depth);

  Dist2 logits(const Vector& representation) const;
  Dist2 classify(const Vector& representation) const { return softmax2(logits(representation)); }

  int depth() const { return depth_; }
  int input_size() const { return static_cast<int>(W1_->value.cols()); }
  int first_layer_size() const { return static_cast<int>(W1_->value.rows()); }

  Parameter& W1() { return *W1_; }
  Parameter& b1() { return *b1_; }
  Parameter& W2() { return *W2_; }
  Parameter& b2() { return *b2_; }
  const Parameter& W1() const { return *W1_; }
  const Parameter& b1() const { return *b1_; }
  const Parameter& W2() const { return *W2_; }
  const Parameter& b2() const { return *b2_; }

 private:
  Parameter* W1_ = nullptr;
  Parameter* b1_ = nullptr;
  Parameter* W2_ = nullptr;
  Parameter* b2_ = nullptr;
  int depth_ = 2;
};

inline constexpr double kDecisionThreshold = 0.5;

// All (i, j) whose positive-class probability is strictly above `threshold`.
std::set<ClausePair> extract_pairs(const Matrix& positive_probability, double threshold = kDecisionThreshold);

}  // namespace ecpe::pairing
