#pragma once

#include "ecpe/common.hpp"
#include "ecpe/params.hpp"

#include <set>
#include <vector>

namespace ecpe::training {

struct LossWeights {
  double lambda_c = 1.0;
  double lambda_e = 1.0;
  double lambda_p = 2.5;
  double loss_weight = 0.4;  // scales the negative-pair term

  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// -log p[label] with p clamped to [1e-7, 1 - 1e-7].
double cross_entropy(const Dist2& probs, int label);

// d cross_entropy / d logits; zero where the clamp is active.
Dist2 cross_entropy_logit_grad(const Dist2& probs, int label);

struct PairLoss {
  double positive = 0.0;  // mean CE over gold-positive cells, 0 when there are none
  double negative = 0.0;  // mean CE over gold-negative cells, 0 when there are none
  double total = 0.0;     // positive + loss_weight * negative
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

// Cells with mask == 0 are padding and contribute nothing.
PairLoss pair_loss(const std::vector<Dist2>& probs, const std::vector<int>& gold,
                   const std::vector<std::uint8_t>& mask, double loss_weight);

// One document: `pair_probs` holds the d*d distributions in row-major order.
PairLoss pair_loss(const std::vector<Dist2>& pair_probs, int d, const std::set<ClausePair>& gold, double loss_weight);

// Mean CE over the clauses of a binary labelling task.
double clause_loss(const std::vector<Dist2>& probs, const std::vector<int>& gold);

// lambda_c * L_c + lambda_e * L_e + lambda_p * L_p. Throws on NaN, naming the
// offending component.
double total_loss(double emotion_loss, double cause_loss, double pair_loss, const LossWeights& weights);

// coefficient * sum of squares over decayed parameters.
double l2_penalty(const ParameterStore& store, double coefficient);
void add_l2_gradient(ParameterStore& store, double coefficient);

}  // namespace ecpe::training
