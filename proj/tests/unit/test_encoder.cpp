#include <doctest.h>

#include "support/fixtures.hpp"

#include "ecpe/encoder.hpp"

#include <cmath>

using namespace ecpe;
using namespace ecpe::encoder;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-loop LSTM written independently of the Eigen implementation.
std::vector<std::vector<double>> reference_lstm(const Matrix& W, const Matrix& U, const Matrix& b, const Matrix& x) {
  const int H = static_cast<int>(U.cols());
  std::vector<double> h(static_cast<std::size_t>(H), 0.0), c(static_cast<std::size_t>(H), 0.0);
  std::vector<std::vector<double>> out;
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    std::vector<double> z(static_cast<std::size_t>(4 * H));
    for (int r = 0; r < 4 * H; ++r) {
      double s = b(r, 0);
      for (Eigen::Index k = 0; k < x.rows(); ++k) s += W(r, k) * x(k, t);
      for (int k = 0; k < H; ++k) s += U(r, k) * h[static_cast<std::size_t>(k)];
      z[static_cast<std::size_t>(r)] = s;
    }
    for (int u = 0; u < H; ++u) {
      const double i = sigmoid(z[static_cast<std::size_t>(u)]);
      const double f = sigmoid(z[static_cast<std::size_t>(H + u)]);
      const double g = std::tanh(z[static_cast<std::size_t>(2 * H + u)]);
      const double o = sigmoid(z[static_cast<std::size_t>(3 * H + u)]);
      c[static_cast<std::size_t>(u)] = f * c[static_cast<std::size_t>(u)] + i * g;
      h[static_cast<std::size_t>(u)] = o * std::tanh(c[static_cast<std::size_t>(u)]);
    }
    out.push_back(h);
  }
  return out;
}

}  // namespace

TEST_CASE("lstm forward matches a scalar reference") {
  ParameterStore store;
  Lstm lstm(store, "l", 3, 4);
  store.init_uniform(0.5, 2);
  const Matrix x = Matrix::Random(3, 6);
  const Matrix h = lstm.forward(x, nullptr);
  const auto ref = reference_lstm(store.get("l.W").value, store.get("l.U").value, store.get("l.b").value, x);
  for (int t = 0; t < 6; ++t)
    for (int u = 0; u < 4; ++u) CHECK(h(u, t) == doctest::Approx(ref[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)]).epsilon(1e-12));
}

TEST_CASE("bilstm backward half reads the sequence in reverse") {
  ParameterStore store;
  BiLstm rnn(store, "r", 3, 2);
  store.init_uniform(0.5, 3);
  const Matrix x = Matrix::Random(3, 5);
  const Matrix out = rnn.forward(x, nullptr);
  REQUIRE(out.rows() == 4);
  const auto fwd = reference_lstm(store.get("r.fwd.W").value, store.get("r.fwd.U").value, store.get("r.fwd.b").value, x);
  const Matrix xr = x.rowwise().reverse();
  const auto bwd = reference_lstm(store.get("r.bwd.W").value, store.get("r.bwd.U").value, store.get("r.bwd.b").value, xr);
  for (int t = 0; t < 5; ++t) {
    for (int u = 0; u < 2; ++u) {
      CHECK(out(u, t) == doctest::Approx(fwd[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)]).epsilon(1e-12));
      CHECK(out(2 + u, t) == doctest::Approx(bwd[static_cast<std::size_t>(4 - t)][static_cast<std::size_t>(u)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention over a single token returns that token's state") {
  ParameterStore store;
  WordEncoder enc(store, 10, 5, 3, 4);
  store.init_uniform(0.3, 5);
  const std::vector<int> ids{4};
  WordEncoder::Cache cache;
  const Vector s = enc.encode(ids, nullptr, &cache);
  REQUIRE(cache.attention.weights.size() == 1);
  CHECK(cache.attention.weights(0) == doctest::Approx(1.0));
  CHECK((s - cache.attention.states.col(0)).norm() < 1e-14);
}

TEST_CASE("equal attention scores give the mean of hidden states") {
  ParameterStore store;
  WordEncoder enc(store, 10, 5, 3, 4);
  store.init_uniform(0.3, 5);
  store.get("attn.ctx").value.setZero();
  const std::vector<int> ids{2, 3, 4, 5};
  WordEncoder::Cache cache;
  const Vector s = enc.encode(ids, nullptr, &cache);
  const Vector mean = cache.attention.states.rowwise().mean();
  CHECK((s - mean).norm() < 1e-12);
}

TEST_CASE("attention weights equal an explicit softmax and sum to one") {
  ParameterStore store;
  WordEncoder enc(store, 20, 6, 3, 5);
  store.init_uniform(0.8, 6);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ids;
    for (int t = 0; t < 5; ++t) ids.push_back(2 + static_cast<int>(rng.below(18)));
    WordEncoder::Cache cache;
    enc.encode(ids, nullptr, &cache);
    const Matrix& W = store.get("attn.proj.W").value;
    const Matrix& b = store.get("attn.proj.b").value;
    const Matrix& v = store.get("attn.ctx").value;
    std::vector<double> e(5);
    double z = 0.0;
    for (int t = 0; t < 5; ++t) {
      const Vector u = (W * cache.attention.states.col(t) + b.col(0)).array().tanh().matrix();
      e[static_cast<std::size_t>(t)] = std::exp(u.dot(v.col(0)));
      z += e[static_cast<std::size_t>(t)];
    }
    for (int t = 0; t < 5; ++t) CHECK(cache.attention.weights(t) == doctest::Approx(e[static_cast<std::size_t>(t)] / z).epsilon(1e-12));
    CHECK(std::abs(cache.attention.weights.sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("trailing pad tokens do not change the clause vector") {
  ParameterStore store;
  WordEncoder enc(store, 10, 5, 3, 4);
  store.init_uniform(0.3, 5);
  const std::vector<int> tight{3, 7, 2};
  const std::vector<int> padded{3, 7, 2, 0, 0, 0};
  CHECK((enc.encode(tight, nullptr, nullptr) - enc.encode(padded, nullptr, nullptr)).norm() < 1e-14);
}

TEST_CASE("emotion context: single clause and backward information flow") {
  ParameterStore store;
  BiLstm rnn(store, "emotion_rnn", 6, 4);
  store.init_uniform(0.3, 8);
  const Matrix one = Matrix::Random(6, 1);
  const Matrix r1 = encode_emotion_context(rnn, one);
  CHECK(r1.cols() == 1);
  CHECK(r1.rows() == 8);

  Matrix S = Matrix::Random(6, 5);
  const Matrix base = encode_emotion_context(rnn, S);
  S.col(4).array() += 0.5;
  const Matrix moved = encode_emotion_context(rnn, S);
  CHECK((base.col(0) - moved.col(0)).norm() > 1e-8);
  // only the backward half of r_1 can see s_d
  CHECK((base.col(0).head(4) - moved.col(0).head(4)).norm() == 0.0);
}

TEST_CASE("identical documents in a batch give identical outputs") {
  model::Model m(test::tiny_config(15), 3);
  Rng rng(2);
  const auto doc = test::random_document(rng, 4, 3, 15, "a");
  auto twin = doc;
  twin.doc_id = "b";
  const auto out = m.predict(model::make_batch(std::vector{doc, twin}));
  CHECK(out[0].emotion == out[1].emotion);
  CHECK(out[0].cause == out[1].cause);
  CHECK(out[0].pairs == out[1].pairs);
}

TEST_CASE("softmax heads: closed-form values and shift invariance") {
  ParameterStore store;
  SoftmaxHead head(store, "W_e", "b_e", 3);
  const Vector r = Vector::Random(3);
  CHECK(predict_emotion(head, r)(1) == doctest::Approx(0.5));
  store.get("b_e").value(1, 0) = 10.0;
  CHECK(predict_emotion(head, r)(1) == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-15));
  CHECK(predict_emotion(head, r)(1) == doctest::Approx(0.99995).epsilon(1e-5));

  store.init_uniform(1.0, 4);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = Vector::Random(3);
    const Dist2 logits = head.logits(x);
    const Dist2 shifted = softmax2(logits.array() + rng.uniform(-50, 50));
    const Dist2 p = softmax2(logits);
    CHECK((p - shifted).norm() < 1e-12);
  }
}

TEST_CASE("cause context requires a 2 x d signal and uses it") {
  ParameterStore store;
  BiLstm rnn(store, "cause_rnn", 6 + 2, 3);
  store.init_uniform(0.3, 9);
  const Matrix S = Matrix::Random(6, 4);
  Matrix half = Matrix::Constant(2, 4, 0.5);
  CHECK(encode_cause_context(rnn, S, half) == encode_cause_context(rnn, S, half));
  CHECK_THROWS_AS(encode_cause_context(rnn, S, Matrix::Constant(2, 3, 0.5)), ValidationError);

  Matrix gold(2, 4);
  gold << 1, 0, 0, 1,  //
      0, 1, 1, 0;
  CHECK((encode_cause_context(rnn, S, gold) - encode_cause_context(rnn, S, half)).norm() > 1e-8);
}

TEST_CASE("variant wiring") {
  const auto pe = wire_variant({Variant::PExtE, false, false});
  CHECK(pe.first == Task::Emotion);
  CHECK(pe.has_edge("emotion_prediction", "cause_encoder"));
  CHECK_FALSE(pe.signal_is_gold);
  CHECK_FALSE(pe.reports_gold(Task::Cause));

  const auto pc = wire_variant({Variant::PExtC, false, false});
  CHECK(pc.first == Task::Cause);
  CHECK(pc.has_edge("cause_prediction", "emotion_encoder"));
  CHECK_FALSE(pc.has_edge("emotion_prediction", "cause_encoder"));

  const auto ce = wire_variant({Variant::CExt, true, false});
  CHECK(ce.has_edge("emotion_labels", "cause_encoder"));
  CHECK(ce.has_edge("emotion_labels", "pair_classifier"));
  CHECK(ce.reports_gold(Task::Emotion));

  const auto ee = wire_variant({Variant::EExt, true, false});
  CHECK(ee.has_edge("cause_labels", "emotion_encoder"));
  CHECK(ee.reports_gold(Task::Cause));
  CHECK_FALSE(ee.reports_gold(Task::Emotion));

  CHECK_THROWS_AS(wire_variant({Variant::CExt, false, false}), ConfigError);
  CHECK_THROWS_AS(wire_variant({Variant::EExt, false, false}), ConfigError);
}

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::PExtE, Variant::PExtC, Variant::CExt, Variant::EExt}) CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("E2E-PExt_C") == Variant::PExtC);
  CHECK(parse_variant("EExt") == Variant::EExt);
  CHECK_THROWS(parse_variant("bogus"));
}

TEST_CASE("cext feeds one-hot gold emotion labels to the cause encoder") {
  // Two documents that differ only in gold emotion labels must give different
  // cause outputs under cext and identical ones under pext-e.
  const int vocab = 12;
  Rng rng(6);
  auto doc = test::random_document(rng, 4, 3, vocab, "c");
  doc.emotion = {0, 1, 1, 0};
  auto flipped = doc;
  flipped.emotion = {1, 0, 0, 1};

  model::Model cext(test::tiny_config(vocab, Variant::CExt), 4);
  const auto a = cext.predict(model::make_batch(std::vector{doc}));
  const auto b = cext.predict(model::make_batch(std::vector{flipped}));
  CHECK(a[0].cause != b[0].cause);
  for (int i = 0; i < 4; ++i) CHECK(a[0].emotion[static_cast<std::size_t>(i)] == one_hot(doc.emotion[static_cast<std::size_t>(i)]));
  CHECK(cext.params().get("cause_rnn.fwd.W").value.cols() == 2 * 4 + 2);
}
