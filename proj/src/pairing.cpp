#include "ecpe/pairing.hpp"

#include <algorithm>

namespace ecpe::pairing {

int relative_bucket(int i, int j, int k) { return std::clamp(j - i, -k, k) + k; }

PositionalTable::PositionalTable(ParameterStore& store, int dim, int clip_distance)
    : table_(&store.add("pos_embed", 2 * clip_distance + 1, dim)), k_(clip_distance) {}

Vector PositionalTable::lookup(int offset) const {
  return table_->value.row(std::clamp(offset, -k_, k_) + k_).transpose();
}

Vector pair_representation(const Vector& r_emotion, const Vector& r_cause, const Vector& positional,
                           const std::optional<Dist2>& labels, Eigen::Index expected_dim) {
  const Eigen::Index n = r_emotion.size() + r_cause.size() + positional.size() + (labels ? 2 : 0);
  if (expected_dim >= 0 && n != expected_dim) {
    throw ValidationError("pair_representation: got " + std::to_string(n) + " entries, expected " +
                          std::to_string(expected_dim));
  }
  Vector out(n);
  out << r_emotion, r_cause, positional;
  if (labels) out.tail(2) = *labels;
  return out;
}

PairClassifier::PairClassifier(ParameterStore& store, int input_size, int hidden_size, int depth) : depth_(depth) {
  if (depth != 1 && depth != 2) throw ConfigError("pair classifier depth must be 1 or 2");
  const int first = depth == 2 ? hidden_size : 2;
  W1_ = &store.add("W_p1", first, input_size, /*decayed=*/true);
  b1_ = &store.add("b_p1", first, 1);
  if (depth == 2) {
    W2_ = &store.add("W_p2", 2, hidden_size, /*decayed=*/true);
    b2_ = &store.add("b_p2", 2, 1);
  }
}

Dist2 PairClassifier::logits(const Vector& representation) const {
  if (representation.size() != W1_->value.cols()) throw ValidationError("pair_classify: representation has wrong size");
  Vector pre = W1_->value * representation + b1_->value.col(0);
  if (depth_ == 1) return pre;
  return W2_->value * pre.cwiseMax(0.0) + b2_->value.col(0);
}

std::set<ClausePair> extract_pairs(const Matrix& positive_probability, double threshold) {
  std::set<ClausePair> out;
  for (Eigen::Index i = 0; i < positive_probability.rows(); ++i) {
    for (Eigen::Index j = 0; j < positive_probability.cols(); ++j) {
      if (positive_probability(i, j) > threshold) out.emplace(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

}  // namespace ecpe::pairing
