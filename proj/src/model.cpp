#include "ecpe/model.hpp"

#include <algorithm>
#include <optional>

namespace ecpe::model {

using encoder::Task;

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must include PAD and UNK");
  if (embed_dim < 1 || word_hidden < 1 || attention_dim < 1 || clause_hidden < 1 || pair_hidden < 1) {
    throw ConfigError("layer sizes must be positive");
  }
  if (use_positional && pos_dim < 1) throw ConfigError("pos_dim must be positive");
  if (clip_distance < 1) throw ConfigError("clip_distance must be >= 1");
  if (pair_depth != 1 && pair_depth != 2) throw ConfigError("pair_depth must be 1 or 2");
}

int ModelConfig::pair_input_size() const {
  const bool labels = variant.variant == encoder::Variant::CExt || variant.variant == encoder::Variant::EExt;
  return 4 * clause_hidden + (use_positional ? pos_dim : 0) + (labels ? 2 : 0);
}

EncodedDocument encode_document(const corpus::Document& doc, const corpus::Vocabulary& vocab, const Caps& caps,
                                TruncationStats* stats) {
  EncodedDocument out;
  out.doc_id = doc.doc_id;
  const int d = std::min(doc.size(), caps.max_clauses);
  if (stats && d < doc.size()) ++stats->documents;
  for (int i = 0; i < d; ++i) {
    std::vector<int> ids = vocab.encode(doc.clauses[static_cast<std::size_t>(i)].tokens);
    if (static_cast<int>(ids.size()) > caps.max_tokens) {
      ids.resize(static_cast<std::size_t>(caps.max_tokens));
      if (stats) ++stats->clauses;
    }
    out.clauses.push_back(std::move(ids));
  }
  out.emotion.assign(static_cast<std::size_t>(d), 0);
  out.cause.assign(static_cast<std::size_t>(d), 0);
  for (const auto& [e, c] : doc.gold_pairs) {
    if (e >= d || c >= d) {
      if (stats) ++stats->pairs;
      continue;
    }
    out.pairs.emplace(e, c);
    out.emotion[static_cast<std::size_t>(e)] = 1;
    out.cause[static_cast<std::size_t>(c)] = 1;
  }
  return out;
}

std::vector<EncodedDocument> encode_documents(const std::vector<corpus::Document>& docs,
                                              const corpus::Vocabulary& vocab, const Caps& caps,
                                              TruncationStats* stats) {
  std::vector<EncodedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode_document(d, vocab, caps, stats));
  return out;
}

std::span<const int> Batch::clause_tokens(int b, int i) const {
  const auto& ids = token_ids[static_cast<std::size_t>(b)];
  return std::span<const int>(ids).subspan(static_cast<std::size_t>(i * max_tokens),
                                           static_cast<std::size_t>(max_tokens));
}

Batch make_batch(std::span<const EncodedDocument> docs, int pad_clauses, int pad_tokens) {
  int need_clauses = 1, need_tokens = 1;
  for (const auto& d : docs) {
    if (d.size() < 1) throw ValidationError("document " + d.doc_id + " has no clauses");
    need_clauses = std::max(need_clauses, d.size());
    for (const auto& c : d.clauses) need_tokens = std::max(need_tokens, static_cast<int>(c.size()));
  }
  if ((pad_clauses && pad_clauses < need_clauses) || (pad_tokens && pad_tokens < need_tokens)) {
    throw ValidationError("make_batch: padding smaller than the longest document");
  }

  Batch batch;
  batch.max_clauses = pad_clauses ? pad_clauses : need_clauses;
  batch.max_tokens = pad_tokens ? pad_tokens : need_tokens;
  const auto C = static_cast<std::size_t>(batch.max_clauses);
  const auto T = static_cast<std::size_t>(batch.max_tokens);
  for (const auto& doc : docs) {
    const auto d = static_cast<std::size_t>(doc.size());
    batch.doc_ids.push_back(doc.doc_id);
    batch.clause_counts.push_back(doc.size());

    std::vector<int> ids(C * T, corpus::Vocabulary::kPad);
    for (std::size_t i = 0; i < d; ++i) {
      const auto& clause = doc.clauses[i];
      if (clause.empty()) throw ValidationError("document " + doc.doc_id + " has an empty clause");
      std::copy(clause.begin(), clause.end(), ids.begin() + static_cast<long>(i * T));
    }
    batch.token_ids.push_back(std::move(ids));

    std::vector<int> emotion(C, 0), cause(C, 0);
    std::copy(doc.emotion.begin(), doc.emotion.end(), emotion.begin());
    std::copy(doc.cause.begin(), doc.cause.end(), cause.begin());
    batch.emotion.push_back(std::move(emotion));
    batch.cause.push_back(std::move(cause));

    std::vector<int> labels(C * C, 0);
    std::vector<std::uint8_t> mask(C * C, 0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) mask[i * C + j] = 1;
    }
    for (const auto& [e, c] : doc.pairs) labels[static_cast<std::size_t>(e) * C + static_cast<std::size_t>(c)] = 1;
    batch.pair_labels.push_back(std::move(labels));
    batch.pair_mask.push_back(std::move(mask));
  }
  return batch;
}

Matrix DocumentOutput::pair_probability() const {
  const int d = size();
  Matrix out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out(i, j) = pairs[static_cast<std::size_t>(i * d + j)][1];
  }
  return out;
}

struct Model::Trace {
  int d = 0;
  std::vector<encoder::WordEncoder::Cache> words;
  Matrix clause_vectors;  // S, 2*h_w x d
  encoder::BiLstm::Cache emotion_cache, cause_cache;
  Matrix emotion_states, cause_states;   // r^e, r^c
  Matrix emotion_logits, cause_logits;   // 2 x d
  std::vector<Dist2> emotion_probs, cause_probs;
  std::vector<int> gold_emotion, gold_cause;
  Matrix pair_labels;  // 2 x d one-hot labels joining the pair representation
  Matrix pair_pre;     // first pair layer pre-activation, one column per cell
  Matrix pair_logits;  // 2 x d*d
  std::vector<Dist2> pair_probs;
};

Model::Model(const ModelConfig& config, std::uint64_t init_seed, double init_bound)
    : config_(config), plan_(encoder::wire_variant(config.variant)), store_(std::make_unique<ParameterStore>()) {
  config_.validate();
  ParameterStore& s = *store_;
  const int clause_dim = 2 * config_.word_hidden;
  const int emotion_in = clause_dim + (plan_.second == Task::Emotion ? 2 : 0);
  const int cause_in = clause_dim + (plan_.second == Task::Cause ? 2 : 0);

  impl_ = std::make_unique<Layers>();
  impl_->words = encoder::WordEncoder(s, config_.vocab_size, config_.embed_dim, config_.word_hidden, config_.attention_dim);
  impl_->emotion_rnn = encoder::BiLstm(s, "emo_rnn", emotion_in, config_.clause_hidden);
  impl_->cause_rnn = encoder::BiLstm(s, "cause_rnn", cause_in, config_.clause_hidden);
  impl_->emotion_head = encoder::SoftmaxHead(s, "W_e", "b_e", 2 * config_.clause_hidden);
  impl_->cause_head = encoder::SoftmaxHead(s, "W_c", "b_c", 2 * config_.clause_hidden);
  if (config_.use_positional) impl_->positional = pairing::PositionalTable(s, config_.pos_dim, config_.clip_distance);
  impl_->pair = pairing::PairClassifier(s, config_.pair_input_size(), config_.pair_hidden, config_.pair_depth);

  s.init_uniform(init_bound, init_seed);
  Rng rng(mix_seed(init_seed, 1));
  Matrix& E = impl_->words.embeddings().value;
  for (Eigen::Index r = 0; r < E.rows(); ++r) {
    for (Eigen::Index c = 0; c < E.cols(); ++c) E(r, c) = rng.uniform(-init_bound, init_bound);
  }
  E.row(corpus::Vocabulary::kPad).setZero();
}

void Model::set_embeddings(const Matrix& vectors) {
  Matrix& E = impl_->words.embeddings().value;
  if (vectors.rows() != E.rows() || vectors.cols() != E.cols()) throw Error("set_embeddings: shape mismatch");
  E = vectors;
  E.row(corpus::Vocabulary::kPad).setZero();
}

void Model::forward_document(const Batch& batch, int b, Rng* dropout_rng, double keep_prob, Trace& t) const {
  const Layers& L = *impl_;
  const int d = batch.clause_counts[static_cast<std::size_t>(b)];
  t.d = d;
  t.words.assign(static_cast<std::size_t>(d), {});
  t.clause_vectors.resize(L.words.output_size(), d);
  Matrix mask;
  for (int i = 0; i < d; ++i) {
    const Matrix* mask_ptr = nullptr;
    if (dropout_rng) {
      mask.resize(config_.embed_dim, batch.max_tokens);
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
          mask(r, c) = dropout_rng->uniform01() < keep_prob ? 1.0 / keep_prob : 0.0;
        }
      }
      mask_ptr = &mask;
    }
    t.clause_vectors.col(i) = L.words.encode(batch.clause_tokens(b, i), mask_ptr, &t.words[static_cast<std::size_t>(i)]);
  }

  const auto& be = batch.emotion[static_cast<std::size_t>(b)];
  const auto& bc = batch.cause[static_cast<std::size_t>(b)];
  t.gold_emotion.assign(be.begin(), be.begin() + d);
  t.gold_cause.assign(bc.begin(), bc.begin() + d);

  auto probs_of = [](const Matrix& logits) {
    std::vector<Dist2> out;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) out.push_back(softmax2(logits.col(i)));
    return out;
  };
  auto signal_from = [&](const std::vector<Dist2>& probs, const std::vector<int>& gold) {
    Matrix sig(2, d);
    for (int i = 0; i < d; ++i) {
      sig.col(i) = plan_.signal_is_gold ? one_hot(gold[static_cast<std::size_t>(i)]) : probs[static_cast<std::size_t>(i)];
    }
    return sig;
  };
  auto with_signal = [&](const Matrix& sig) {
    Matrix in(t.clause_vectors.rows() + 2, d);
    in << t.clause_vectors, sig;
    return in;
  };

  if (plan_.first == Task::Emotion) {
    t.emotion_states = L.emotion_rnn.forward(t.clause_vectors, &t.emotion_cache);
    t.emotion_logits = L.emotion_head.logits(t.emotion_states);
    t.emotion_probs = probs_of(t.emotion_logits);
    t.pair_labels = signal_from(t.emotion_probs, t.gold_emotion);
    t.cause_states = L.cause_rnn.forward(with_signal(t.pair_labels), &t.cause_cache);
    t.cause_logits = L.cause_head.logits(t.cause_states);
    t.cause_probs = probs_of(t.cause_logits);
  } else {
    t.cause_states = L.cause_rnn.forward(t.clause_vectors, &t.cause_cache);
    t.cause_logits = L.cause_head.logits(t.cause_states);
    t.cause_probs = probs_of(t.cause_logits);
    t.pair_labels = signal_from(t.cause_probs, t.gold_cause);
    t.emotion_states = L.emotion_rnn.forward(with_signal(t.pair_labels), &t.emotion_cache);
    t.emotion_logits = L.emotion_head.logits(t.emotion_states);
    t.emotion_probs = probs_of(t.emotion_logits);
  }

  // First pair layer, decomposed by block of the representation.
  const Matrix& W1 = L.pair.W1().value;
  const int hc2 = 2 * config_.clause_hidden;
  const Matrix A = W1.leftCols(hc2) * t.emotion_states;
  const Matrix B = W1.middleCols(hc2, hc2) * t.cause_states;
  Eigen::Index offset = 2 * hc2;
  Matrix P;
  if (config_.use_positional) {
    P = W1.middleCols(offset, config_.pos_dim) * L.positional.rows().transpose();
    offset += config_.pos_dim;
  }
  Matrix labels_term;
  if (plan_.labels_in_pair) labels_term = W1.middleCols(offset, 2) * t.pair_labels;

  const Eigen::Index cells = static_cast<Eigen::Index>(d) * d;
  t.pair_pre.resize(W1.rows(), cells);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      auto col = t.pair_pre.col(i * d + j);
      col = A.col(i) + B.col(j) + L.pair.b1().value.col(0);
      if (config_.use_positional) col += P.col(pairing::relative_bucket(i, j, config_.clip_distance));
      if (plan_.labels_in_pair) col += labels_term.col(plan_.first == Task::Emotion ? i : j);
    }
  }
  if (config_.pair_depth == 2) {
    t.pair_logits = L.pair.W2().value * t.pair_pre.cwiseMax(0.0);
    t.pair_logits.colwise() += L.pair.b2().value.col(0);
  } else {
    t.pair_logits = t.pair_pre;
  }
  t.pair_probs = probs_of(t.pair_logits);
}

void Model::backward_document(Trace& t, const Matrix& d_emotion_logits, const Matrix& d_cause_logits,
                              const Matrix& d_pair_logits) const {
  Layers& L = *impl_;
  const int d = t.d;
  const int hc2 = 2 * config_.clause_hidden;

  Matrix d_pre;
  if (config_.pair_depth == 2) {
    const Matrix hidden = t.pair_pre.cwiseMax(0.0);
    L.pair.W2().grad.noalias() += d_pair_logits * hidden.transpose();
    L.pair.b2().grad.col(0) += d_pair_logits.rowwise().sum();
    d_pre = L.pair.W2().value.transpose() * d_pair_logits;
    d_pre.array() *= (t.pair_pre.array() > 0.0).cast<double>();
  } else {
    d_pre = d_pair_logits;
  }
  L.pair.b1().grad.col(0) += d_pre.rowwise().sum();

  const Eigen::Index rows = d_pre.rows();
  Matrix dA = Matrix::Zero(rows, d), dB = Matrix::Zero(rows, d), dLab = Matrix::Zero(rows, d);
  Matrix dP;
  if (config_.use_positional) dP = Matrix::Zero(rows, 2 * config_.clip_distance + 1);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const auto g = d_pre.col(i * d + j);
      dA.col(i) += g;
      dB.col(j) += g;
      if (config_.use_positional) dP.col(pairing::relative_bucket(i, j, config_.clip_distance)) += g;
      if (plan_.labels_in_pair) dLab.col(plan_.first == Task::Emotion ? i : j) += g;
    }
  }
  Matrix& W1 = L.pair.W1().value;
  Matrix& dW1 = L.pair.W1().grad;
  dW1.leftCols(hc2).noalias() += dA * t.emotion_states.transpose();
  dW1.middleCols(hc2, hc2).noalias() += dB * t.cause_states.transpose();
  Matrix d_emotion_states = W1.leftCols(hc2).transpose() * dA;
  Matrix d_cause_states = W1.middleCols(hc2, hc2).transpose() * dB;
  Eigen::Index offset = 2 * hc2;
  if (config_.use_positional) {
    Parameter& pe = L.positional.parameter();
    dW1.middleCols(offset, config_.pos_dim).noalias() += dP * pe.value;
    pe.grad.noalias() += dP.transpose() * W1.middleCols(offset, config_.pos_dim);
    offset += config_.pos_dim;
  }
  if (plan_.labels_in_pair) dW1.middleCols(offset, 2).noalias() += dLab * t.pair_labels.transpose();

  const bool emotion_first = plan_.first == Task::Emotion;
  encoder::SoftmaxHead& first_head = emotion_first ? L.emotion_head : L.cause_head;
  encoder::SoftmaxHead& second_head = emotion_first ? L.cause_head : L.emotion_head;
  encoder::BiLstm& first_rnn = emotion_first ? L.emotion_rnn : L.cause_rnn;
  encoder::BiLstm& second_rnn = emotion_first ? L.cause_rnn : L.emotion_rnn;
  const encoder::BiLstm::Cache& first_cache = emotion_first ? t.emotion_cache : t.cause_cache;
  const encoder::BiLstm::Cache& second_cache = emotion_first ? t.cause_cache : t.emotion_cache;
  const Matrix& first_states = emotion_first ? t.emotion_states : t.cause_states;
  const Matrix& second_states = emotion_first ? t.cause_states : t.emotion_states;
  const std::vector<Dist2>& first_probs = emotion_first ? t.emotion_probs : t.cause_probs;
  Matrix& d_first = emotion_first ? d_emotion_states : d_cause_states;
  Matrix& d_second = emotion_first ? d_cause_states : d_emotion_states;
  Matrix d_first_logits = emotion_first ? d_emotion_logits : d_cause_logits;
  const Matrix& d_second_logits = emotion_first ? d_cause_logits : d_emotion_logits;

  d_second += second_head.backward(d_second_logits, second_states);
  const Matrix d_second_in = second_rnn.backward(d_second, second_cache);
  Matrix d_clauses = d_second_in.topRows(t.clause_vectors.rows());
  if (!plan_.signal_is_gold && !plan_.detach_signal) {
    for (int i = 0; i < d; ++i) {
      d_first_logits.col(i) += encoder::softmax2_backward(first_probs[static_cast<std::size_t>(i)],
                                                          d_second_in.bottomRows(2).col(i));
    }
  }
  d_first += first_head.backward(d_first_logits, first_states);
  d_clauses += first_rnn.backward(d_first, first_cache);

  for (int i = 0; i < d; ++i) L.words.backward(d_clauses.col(i), t.words[static_cast<std::size_t>(i)]);
}

LossBreakdown Model::run(const Batch& batch, const training::LossWeights& weights, double l2_coefficient,
                         const DropoutConfig* dropout, bool backprop, std::vector<DocumentOutput>* outputs) const {
  LossBreakdown out;
  for (int b = 0; b < batch.size(); ++b) {
    const auto& labels = batch.pair_labels[static_cast<std::size_t>(b)];
    const auto& mask = batch.pair_mask[static_cast<std::size_t>(b)];
    out.n_clauses += static_cast<std::size_t>(batch.clause_counts[static_cast<std::size_t>(b)]);
    for (std::size_t n = 0; n < mask.size(); ++n) {
      if (!mask[n]) continue;
      labels[n] ? ++out.n_positive : ++out.n_negative;
    }
  }
  const double clause_scale = out.n_clauses ? 1.0 / static_cast<double>(out.n_clauses) : 0.0;
  const double pos_scale = out.n_positive ? 1.0 / static_cast<double>(out.n_positive) : 0.0;
  const double neg_scale = out.n_negative ? 1.0 / static_cast<double>(out.n_negative) : 0.0;

  std::optional<Rng> rng;
  if (dropout && dropout->keep_prob < 1.0) rng.emplace(dropout->seed);
  if (outputs) outputs->clear();

  for (int b = 0; b < batch.size(); ++b) {
    Trace t;
    forward_document(batch, b, rng ? &*rng : nullptr, dropout ? dropout->keep_prob : 1.0, t);
    const int d = t.d;
    const auto C = static_cast<std::size_t>(batch.max_clauses);
    const auto& labels = batch.pair_labels[static_cast<std::size_t>(b)];
    const auto& mask = batch.pair_mask[static_cast<std::size_t>(b)];

    Matrix d_emotion(2, d), d_cause(2, d), d_pair(2, static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) {
      const auto si = static_cast<std::size_t>(i);
      out.emotion += training::cross_entropy(t.emotion_probs[si], t.gold_emotion[si]);
      out.cause += training::cross_entropy(t.cause_probs[si], t.gold_cause[si]);
      if (backprop) {
        d_emotion.col(i) = weights.lambda_e * clause_scale *
                           training::cross_entropy_logit_grad(t.emotion_probs[si], t.gold_emotion[si]);
        d_cause.col(i) = weights.lambda_c * clause_scale *
                         training::cross_entropy_logit_grad(t.cause_probs[si], t.gold_cause[si]);
      }
      for (int j = 0; j < d; ++j) {
        const std::size_t cell = si * C + static_cast<std::size_t>(j);
        const std::size_t local = si * static_cast<std::size_t>(d) + static_cast<std::size_t>(j);
        if (!mask[cell]) throw Error("batch mask does not cover document " + batch.doc_ids[static_cast<std::size_t>(b)]);
        const int y = labels[cell];
        const double ce = training::cross_entropy(t.pair_probs[local], y);
        (y ? out.pair_positive : out.pair_negative) += ce;
        if (backprop) {
          const double scale = weights.lambda_p * (y ? pos_scale : weights.loss_weight * neg_scale);
          d_pair.col(static_cast<Eigen::Index>(local)) = scale * training::cross_entropy_logit_grad(t.pair_probs[local], y);
        }
      }
    }
    if (backprop) backward_document(t, d_emotion, d_cause, d_pair);

    if (outputs) {
      DocumentOutput o;
      o.doc_id = batch.doc_ids[static_cast<std::size_t>(b)];
      for (int i = 0; i < d; ++i) {
        const auto si = static_cast<std::size_t>(i);
        o.emotion.push_back(plan_.reports_gold(Task::Emotion) ? one_hot(t.gold_emotion[si]) : t.emotion_probs[si]);
        o.cause.push_back(plan_.reports_gold(Task::Cause) ? one_hot(t.gold_cause[si]) : t.cause_probs[si]);
      }
      o.pairs = std::move(t.pair_probs);
      outputs->push_back(std::move(o));
    }
  }

  out.emotion *= clause_scale;
  out.cause *= clause_scale;
  out.pair_positive *= pos_scale;
  out.pair_negative *= neg_scale;
  out.pair = out.pair_positive + weights.loss_weight * out.pair_negative;
  out.total = training::total_loss(out.emotion, out.cause, out.pair, weights);
  out.l2 = training::l2_penalty(*store_, l2_coefficient);
  if (backprop && l2_coefficient > 0.0) training::add_l2_gradient(*store_, l2_coefficient);
  if (backprop) impl_->words.embeddings().grad.row(corpus::Vocabulary::kPad).setZero();
  return out;
}

std::vector<DocumentOutput> Model::predict(const Batch& batch) const {
  std::vector<DocumentOutput> outputs;
  run(batch, training::LossWeights{}, 0.0, nullptr, false, &outputs);
  return outputs;
}

LossBreakdown Model::evaluate_loss(const Batch& batch, const training::LossWeights& weights, double l2_coefficient,
                                   std::vector<DocumentOutput>* outputs) const {
  return run(batch, weights, l2_coefficient, nullptr, false, outputs);
}

LossBreakdown Model::forward_backward(const Batch& batch, const training::LossWeights& weights, double l2_coefficient,
                                      const DropoutConfig& dropout) {
  return run(batch, weights, l2_coefficient, &dropout, true, nullptr);
}

}  // namespace ecpe::model
