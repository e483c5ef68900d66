#include "ecpe/loss.hpp"

#include <cmath>

namespace ecpe::training {

void LossWeights::validate() const {
  if (!(lambda_c >= 0.0) || !(lambda_e >= 0.0) || !(lambda_p >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (!(loss_weight >= 0.0 && loss_weight <= 1.0)) throw ConfigError("loss_weight must lie in [0, 1]");
}

double cross_entropy(const Dist2& probs, int label) {
  const double p = std::clamp(probs[label ? 1 : 0], kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -std::log(p);
}

Dist2 cross_entropy_logit_grad(const Dist2& probs, int label) {
  const double p = probs[label ? 1 : 0];
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return Dist2::Zero();
  return probs - one_hot(label);
}

PairLoss pair_loss(const std::vector<Dist2>& probs, const std::vector<int>& gold,
                   const std::vector<std::uint8_t>& mask, double loss_weight) {
  if (probs.size() != gold.size() || probs.size() != mask.size()) throw ValidationError("pair_loss: size mismatch");
  PairLoss out;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (!mask[n]) continue;
    const double ce = cross_entropy(probs[n], gold[n]);
    if (gold[n]) {
      out.positive += ce;
      ++out.n_positive;
    } else {
      out.negative += ce;
      ++out.n_negative;
    }
  }
  if (out.n_positive) out.positive /= static_cast<double>(out.n_positive);
  if (out.n_negative) out.negative /= static_cast<double>(out.n_negative);
  out.total = out.positive + loss_weight * out.negative;
  return out;
}

PairLoss pair_loss(const std::vector<Dist2>& pair_probs, int d, const std::set<ClausePair>& gold, double loss_weight) {
  const auto cells = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  if (pair_probs.size() != cells) throw ValidationError("pair_loss: expected d*d distributions");
  std::vector<int> labels(cells, 0);
  for (const auto& [i, j] : gold) labels[static_cast<std::size_t>(i * d + j)] = 1;
  return pair_loss(pair_probs, labels, std::vector<std::uint8_t>(cells, 1), loss_weight);
}

double clause_loss(const std::vector<Dist2>& probs, const std::vector<int>& gold) {
  if (probs.size() != gold.size()) throw ValidationError("clause_loss: size mismatch");
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) sum += cross_entropy(probs[i], gold[i]);
  return sum / static_cast<double>(probs.size());
}

double total_loss(double emotion_loss, double cause_loss, double pair_loss, const LossWeights& w) {
  if (std::isnan(emotion_loss)) throw Error("loss diverged: L_e is NaN");
  if (std::isnan(cause_loss)) throw Error("loss diverged: L_c is NaN");
  if (std::isnan(pair_loss)) throw Error("loss diverged: L_p is NaN");
  return w.lambda_c * cause_loss + w.lambda_e * emotion_loss + w.lambda_p * pair_loss;
}

double l2_penalty(const ParameterStore& store, double coefficient) {
  double sum = 0.0;
  for (const auto& p : store.all()) {
    if (p.decayed) sum += p.value.squaredNorm();
  }
  return coefficient * sum;
}

void add_l2_gradient(ParameterStore& store, double coefficient) {
  for (auto& p : store.all()) {
    if (p.decayed) p.grad += 2.0 * coefficient * p.value;
  }
}

}  // namespace ecpe::training
