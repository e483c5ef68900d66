#pragma once

#include "ecpe/corpus.hpp"
#include "ecpe/model.hpp"
#include "ecpe/vocab.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace ecpe::test {

// The Figure-1 style document: four clauses, pairs (1,1) and (2,3).
inline corpus::Document figure_one_document() {
  const std::string line =
      R"({"doc_id": "fig1", "clauses": ["Adele arrived at her apartment late in the afternoon after a long day of work.",)"
      R"( "She was still furious with her husband for not remembering her 40th birthday.",)"
      R"( "As soon as she unlocked the door, she gasped with surprise;",)"
      R"( "Mikhael and Harriet had organized a huge party for her."], "pairs": [[1, 1], [2, 3]]})";
  return corpus::parse_document(line, 1);
}

// Small layer sizes so finite differences and training stay fast.
inline model::ModelConfig tiny_config(int vocab_size, encoder::Variant variant = encoder::Variant::PExtE) {
  model::ModelConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = 5;
  c.word_hidden = 4;
  c.attention_dim = 4;
  c.clause_hidden = 4;
  c.pos_dim = 3;
  c.pair_hidden = 4;
  c.variant.variant = variant;
  c.variant.gold_labels_available = true;
  return c;
}

// A random encoded document with `d` clauses of `tokens` ids each.
inline model::EncodedDocument random_document(Rng& rng, int d, int tokens, int vocab_size, const std::string& id) {
  model::EncodedDocument doc;
  doc.doc_id = id;
  for (int i = 0; i < d; ++i) {
    std::vector<int> ids;
    for (int t = 0; t < tokens; ++t) ids.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_size - 1))));
    doc.clauses.push_back(ids);
  }
  doc.emotion.assign(static_cast<std::size_t>(d), 0);
  doc.cause.assign(static_cast<std::size_t>(d), 0);
  const int pairs = 1 + static_cast<int>(rng.below(2));
  for (int k = 0; k < pairs; ++k) {
    const int e = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
    doc.pairs.emplace(e, c);
    doc.emotion[static_cast<std::size_t>(e)] = 1;
    doc.cause[static_cast<std::size_t>(c)] = 1;
  }
  return doc;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst;
  int checked = 0;
};

// Central differences of (task loss + L2) for every entry of the named
// parameters, compared with the analytic gradient. Entries where both values
// are below `floor` in magnitude are compared absolutely against `floor`.
inline GradientCheck check_gradients(model::Model& m, const model::Batch& batch, const training::LossWeights& w,
                                     double l2, const std::vector<std::string>& names, double step = 1e-3,
                                     double floor = 1e-8) {
  m.params().zero_grad();
  m.forward_backward(batch, w, l2);
  auto objective = [&] {
    const auto loss = m.evaluate_loss(batch, w, l2);
    return loss.total + loss.l2;
  };
  GradientCheck out;
  for (const auto& name : names) {
    Parameter& p = m.params().get(name);
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double saved = p.value.data()[k];
      p.value.data()[k] = saved + step;
      const double up = objective();
      p.value.data()[k] = saved - step;
      const double down = objective();
      p.value.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p.grad.data()[k];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
      const double rel = std::abs(numeric - analytic) / scale;
      ++out.checked;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = name + "[" + std::to_string(k) + "] analytic=" + std::to_string(analytic) +
                    " numeric=" + std::to_string(numeric);
      }
    }
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ecpe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ecpe::test
