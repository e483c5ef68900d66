#include "ecpe/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace ecpe::encoder {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) { return 1.0 / (1.0 + (-z).exp()); }

}  // namespace

Lstm::Lstm(ParameterStore& store, const std::string& prefix, int input_size, int hidden_size)
    : W_(&store.add(prefix + ".W", 4 * hidden_size, input_size)),
      U_(&store.add(prefix + ".U", 4 * hidden_size, hidden_size)),
      b_(&store.add(prefix + ".b", 4 * hidden_size, 1)),
      input_size_(input_size),
      hidden_size_(hidden_size) {}

Matrix Lstm::forward(const Matrix& input, Cache* cache) const {
  const Eigen::Index H = hidden_size_;
  const Eigen::Index T = input.cols();
  if (input.rows() != input_size_) throw Error("lstm: input has wrong dimension");

  Matrix z = W_->value * input;
  z.colwise() += b_->value.col(0);

  Matrix gates(4 * H, T), cells(H, T), hidden(H, T);
  Vector h = Vector::Zero(H), c = Vector::Zero(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    Vector zt = z.col(t) + U_->value * h;
    Eigen::ArrayXd i = sigmoid(zt.segment(0, H).array());
    Eigen::ArrayXd f = sigmoid(zt.segment(H, H).array());
    Eigen::ArrayXd g = zt.segment(2 * H, H).array().tanh();
    Eigen::ArrayXd o = sigmoid(zt.segment(3 * H, H).array());
    c = (f * c.array() + i * g).matrix();
    h = (o * c.array().tanh()).matrix();
    gates.col(t) << i.matrix(), f.matrix(), g.matrix(), o.matrix();
    cells.col(t) = c;
    hidden.col(t) = h;
  }
  if (cache) {
    cache->input = input;
    cache->gates = gates;
    cache->cells = cells;
    cache->hidden = hidden;
  }
  return hidden;
}

Matrix Lstm::backward(const Matrix& d_hidden, const Cache& cache) {
  const Eigen::Index H = hidden_size_;
  const Eigen::Index T = d_hidden.cols();
  Matrix dz(4 * H, T);
  Vector dh_next = Vector::Zero(H), dc_next = Vector::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto i = cache.gates.col(t).segment(0, H).array();
    const auto f = cache.gates.col(t).segment(H, H).array();
    const auto g = cache.gates.col(t).segment(2 * H, H).array();
    const auto o = cache.gates.col(t).segment(3 * H, H).array();
    const Eigen::ArrayXd tc = cache.cells.col(t).array().tanh();
    const Eigen::ArrayXd c_prev = t > 0 ? Eigen::ArrayXd(cache.cells.col(t - 1).array()) : Eigen::ArrayXd::Zero(H);

    const Eigen::ArrayXd dh = d_hidden.col(t).array() + dh_next.array();
    const Eigen::ArrayXd dc = dh * o * (1.0 - tc * tc) + dc_next.array();
    dz.col(t).segment(0, H) = (dc * g * i * (1.0 - i)).matrix();
    dz.col(t).segment(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.col(t).segment(2 * H, H) = (dc * i * (1.0 - g * g)).matrix();
    dz.col(t).segment(3 * H, H) = (dh * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();
    dh_next = U_->value.transpose() * dz.col(t);
  }
  if (T > 0) {
    W_->grad.noalias() += dz * cache.input.transpose();
    if (T > 1) U_->grad.noalias() += dz.rightCols(T - 1) * cache.hidden.leftCols(T - 1).transpose();
    b_->grad.col(0) += dz.rowwise().sum();
  }
  return W_->value.transpose() * dz;
}

BiLstm::BiLstm(ParameterStore& store, const std::string& prefix, int input_size, int hidden_size)
    : fwd_(store, prefix + ".fwd", input_size, hidden_size), bwd_(store, prefix + ".bwd", input_size, hidden_size) {}

Matrix BiLstm::forward(const Matrix& input, Cache* cache) const {
  const Eigen::Index H = fwd_.hidden_size();
  const Matrix reversed = input.rowwise().reverse();
  Matrix out(2 * H, input.cols());
  out.topRows(H) = fwd_.forward(input, cache ? &cache->fwd : nullptr);
  out.bottomRows(H) = bwd_.forward(reversed, cache ? &cache->bwd : nullptr).rowwise().reverse();
  return out;
}

Matrix BiLstm::backward(const Matrix& d_output, const Cache& cache) {
  const Eigen::Index H = fwd_.hidden_size();
  Matrix d_input = fwd_.backward(d_output.topRows(H), cache.fwd);
  const Matrix d_rev = bwd_.backward(d_output.bottomRows(H).rowwise().reverse(), cache.bwd);
  d_input += d_rev.rowwise().reverse();
  return d_input;
}

AttentionPool::AttentionPool(ParameterStore& store, const std::string& prefix, int state_size, int attention_size)
    : W_(&store.add(prefix + ".proj.W", attention_size, state_size)),
      b_(&store.add(prefix + ".proj.b", attention_size, 1)),
      v_(&store.add(prefix + ".ctx", attention_size, 1)) {}

Vector AttentionPool::forward(const Matrix& states, int length, Cache* cache) const {
  const Eigen::Index T = states.cols();
  if (length < 1 || length > T) throw Error("attention: clause has no tokens");
  Matrix projected = W_->value * states;
  projected.colwise() += b_->value.col(0);
  projected = projected.array().tanh().matrix();

  Vector scores = projected.transpose() * v_->value.col(0);
  for (Eigen::Index t = length; t < T; ++t) scores(t) = -std::numeric_limits<double>::infinity();
  const double m = scores.head(length).maxCoeff();
  Vector weights = (scores.array() - m).exp().matrix();
  weights /= weights.sum();

  Vector pooled = states * weights;
  if (cache) {
    cache->states = states;
    cache->projected = std::move(projected);
    cache->weights = weights;
    cache->length = length;
  }
  return pooled;
}

Matrix AttentionPool::backward(const Vector& d_pooled, const Cache& cache) {
  const Vector& a = cache.weights;
  Matrix d_states = d_pooled * a.transpose();
  const Vector d_a = cache.states.transpose() * d_pooled;
  Vector d_scores = (a.array() * (d_a.array() - a.dot(d_a))).matrix();
  for (Eigen::Index t = cache.length; t < d_scores.size(); ++t) d_scores(t) = 0.0;

  v_->grad.col(0) += cache.projected * d_scores;
  Matrix d_pre = v_->value.col(0) * d_scores.transpose();
  d_pre.array() *= 1.0 - cache.projected.array().square();
  W_->grad.noalias() += d_pre * cache.states.transpose();
  b_->grad.col(0) += d_pre.rowwise().sum();
  d_states.noalias() += W_->value.transpose() * d_pre;
  return d_states;
}

WordEncoder::WordEncoder(ParameterStore& store, int vocab_size, int embed_dim, int hidden_size, int attention_size)
    : embed_(&store.add("word_embed", vocab_size, embed_dim)),
      rnn_(store, "word_rnn", embed_dim, hidden_size),
      attention_(store, "attn", 2 * hidden_size, attention_size),
      embed_dim_(embed_dim) {
  embed_->embedding = true;
}

Vector WordEncoder::encode(std::span<const int> ids, const Matrix* dropout_mask, Cache* cache) const {
  const auto length = static_cast<Eigen::Index>(std::find(ids.begin(), ids.end(), 0) - ids.begin());
  if (length == 0) throw Error("encode_clause: empty clause");
  const auto padded = static_cast<Eigen::Index>(ids.size());

  Matrix x(embed_dim_, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    const int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= embed_->value.rows()) throw Error("encode_clause: token id out of range");
    x.col(t) = embed_->value.row(id).transpose();
  }
  if (dropout_mask) x.array() *= dropout_mask->leftCols(length).array();

  BiLstm::Cache* rc = cache ? &cache->rnn : nullptr;
  Matrix states = Matrix::Zero(rnn_.output_size(), padded);
  states.leftCols(length) = rnn_.forward(x, rc);
  Vector pooled = attention_.forward(states, static_cast<int>(length), cache ? &cache->attention : nullptr);
  if (cache) {
    cache->ids.assign(ids.begin(), ids.begin() + length);
    cache->dropout_mask = dropout_mask ? Matrix(dropout_mask->leftCols(length)) : Matrix();
  }
  return pooled;
}

void WordEncoder::backward(const Vector& d_clause, const Cache& cache) {
  const Matrix d_states = attention_.backward(d_clause, cache.attention);
  const auto length = static_cast<Eigen::Index>(cache.ids.size());
  Matrix d_x = rnn_.backward(d_states.leftCols(length), cache.rnn);
  if (cache.dropout_mask.size()) d_x.array() *= cache.dropout_mask.array();
  for (Eigen::Index t = 0; t < length; ++t) {
    const int id = cache.ids[static_cast<std::size_t>(t)];
    if (id != 0) embed_->grad.row(id) += d_x.col(t).transpose();
  }
}

SoftmaxHead::SoftmaxHead(ParameterStore& store, const std::string& weight_name, const std::string& bias_name,
                         int input_size)
    : W_(&store.add(weight_name, 2, input_size, /*decayed=*/true)), b_(&store.add(bias_name, 2, 1)) {}

Dist2 SoftmaxHead::logits(const Vector& r) const { return W_->value * r + b_->value.col(0); }

Matrix SoftmaxHead::logits(const Matrix& r) const {
  Matrix out = W_->value * r;
  out.colwise() += b_->value.col(0);
  return out;
}

Matrix SoftmaxHead::backward(const Matrix& d_logits, const Matrix& r) {
  W_->grad.noalias() += d_logits * r.transpose();
  b_->grad.col(0) += d_logits.rowwise().sum();
  return W_->value.transpose() * d_logits;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::PExtE: return "pext-e";
    case Variant::PExtC: return "pext-c";
    case Variant::CExt: return "cext";
    case Variant::EExt: return "eext";
  }
  return "unknown";
}

Variant parse_variant(const std::string& text) {
  std::string key;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (key.rfind("e2e", 0) == 0) key = key.substr(3);
  if (key == "pexte") return Variant::PExtE;
  if (key == "pextc") return Variant::PExtC;
  if (key == "cext") return Variant::CExt;
  if (key == "eext") return Variant::EExt;
  throw ConfigError("unknown variant '" + text + "' (expected pext-e, pext-c, cext or eext)");
}

bool DataflowPlan::has_edge(const std::string& from, const std::string& to) const {
  return std::any_of(edges.begin(), edges.end(), [&](const DataflowEdge& e) { return e.from == from && e.to == to; });
}

DataflowPlan wire_variant(const VariantConfig& config) {
  DataflowPlan plan;
  plan.variant = config.variant;
  plan.detach_signal = config.detach_signal;
  switch (config.variant) {
    case Variant::PExtE:
    case Variant::CExt:
      plan.first = Task::Emotion;
      plan.second = Task::Cause;
      break;
    case Variant::PExtC:
    case Variant::EExt:
      plan.first = Task::Cause;
      plan.second = Task::Emotion;
      break;
  }
  plan.signal_is_gold = config.variant == Variant::CExt || config.variant == Variant::EExt;
  plan.labels_in_pair = plan.signal_is_gold;
  if (plan.signal_is_gold && !config.gold_labels_available) {
    throw ConfigError("variant " + to_string(config.variant) + " needs true " +
                      (plan.first == Task::Emotion ? "emotion" : "cause") + " labels at run time");
  }

  const std::string first = plan.first == Task::Emotion ? "emotion" : "cause";
  const std::string second = plan.second == Task::Emotion ? "emotion" : "cause";
  plan.edges = {
      {"clause_vectors", first + "_encoder"},
      {"clause_vectors", second + "_encoder"},
      {first + "_encoder", first + "_prediction"},
      {second + "_encoder", second + "_prediction"},
      {plan.signal_is_gold ? first + "_labels" : first + "_prediction", second + "_encoder"},
      {"emotion_encoder", "pair_classifier"},
      {"cause_encoder", "pair_classifier"},
      {"positional_embedding", "pair_classifier"},
  };
  if (plan.labels_in_pair) plan.edges.push_back({first + "_labels", "pair_classifier"});
  return plan;
}

Matrix encode_emotion_context(const BiLstm& encoder, const Matrix& clause_vectors) {
  return encoder.forward(clause_vectors, nullptr);
}

Matrix encode_cause_context(const BiLstm& encoder, const Matrix& clause_vectors, const Matrix& emotion_signal) {
  if (emotion_signal.cols() != clause_vectors.cols() || emotion_signal.rows() != 2) {
    throw ValidationError("encode_cause_context: emotion signal must be 2 x " + std::to_string(clause_vectors.cols()));
  }
  Matrix input(clause_vectors.rows() + 2, clause_vectors.cols());
  input << clause_vectors, emotion_signal;
  return encoder.forward(input, nullptr);
}

}  // namespace ecpe::encoder
