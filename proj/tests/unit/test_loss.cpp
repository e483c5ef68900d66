#include <doctest.h>

#include "support/fixtures.hpp"

#include "ecpe/loss.hpp"

#include <cmath>
#include <limits>

using namespace ecpe;
using namespace ecpe::training;

namespace {

std::vector<Dist2> uniform_grid(int d) { return std::vector<Dist2>(static_cast<std::size_t>(d * d), Dist2(0.5, 0.5)); }

}  // namespace

TEST_CASE("uniform predictions give ln 2 on both pair terms") {
  const auto pl = pair_loss(uniform_grid(4), 4, {{1, 1}, {2, 3}}, 1.0);
  CHECK(pl.positive == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(pl.negative == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(pl.total == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(pl.n_positive == 2);
  CHECK(pl.n_negative == 14);
}

TEST_CASE("zero loss weight leaves only the positive term") {
  Rng rng(1);
  std::vector<Dist2> probs;
  for (int k = 0; k < 9; ++k) {
    const double p = rng.uniform(0.01, 0.99);
    probs.emplace_back(1 - p, p);
  }
  const auto pl = pair_loss(probs, 3, {{0, 2}}, 0.0);
  CHECK(pl.total == pl.positive);
  CHECK(pl.negative > 0.0);
}

TEST_CASE("perfect predictions are clamped but nearly free") {
  std::vector<Dist2> probs(16, Dist2(1.0, 0.0));
  probs[1 * 4 + 1] = Dist2(0.0, 1.0);
  probs[2 * 4 + 3] = Dist2(0.0, 1.0);
  const auto pl = pair_loss(probs, 4, {{1, 1}, {2, 3}}, 0.4);
  CHECK(pl.total < 1e-6);
  CHECK(pl.total > 0.0);
  CHECK(cross_entropy(Dist2(1.0, 0.0), 1) == doctest::Approx(-std::log(1e-7)));
}

TEST_CASE("pair loss equals a brute-force mean over positive and negative cells") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(8));
    std::vector<Dist2> probs;
    for (int k = 0; k < d * d; ++k) {
      const double p = rng.uniform01();
      probs.emplace_back(1 - p, p);
    }
    std::set<ClausePair> gold;
    for (int k = 0, n = static_cast<int>(rng.below(3)); k < n; ++k) {
      gold.emplace(static_cast<int>(rng.below(static_cast<std::uint64_t>(d))),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
    }
    const double w = rng.uniform01();
    double pos = 0, neg = 0;
    int np = 0, nn = 0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double p = std::clamp(probs[static_cast<std::size_t>(i * d + j)](1), 1e-7, 1 - 1e-7);
        if (gold.count({i, j})) {
          pos -= std::log(p);
          ++np;
        } else {
          neg -= std::log(1 - p);
          ++nn;
        }
      }
    }
    pos = np ? pos / np : 0.0;
    neg = nn ? neg / nn : 0.0;
    const auto pl = pair_loss(probs, d, gold, w);
    CHECK(pl.positive == doctest::Approx(pos).epsilon(1e-12));
    CHECK(pl.negative == doctest::Approx(neg).epsilon(1e-12));
    CHECK(pl.total == doctest::Approx(pos + w * neg).epsilon(1e-12));
  }
}

TEST_CASE("pair loss is nondecreasing in the loss weight") {
  Rng rng(8);
  std::vector<Dist2> probs;
  for (int k = 0; k < 25; ++k) {
    const double p = rng.uniform01();
    probs.emplace_back(1 - p, p);
  }
  double prev = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double total = pair_loss(probs, 5, {{0, 1}, {3, 3}}, k / 20.0).total;
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("masked cells contribute nothing") {
  std::vector<Dist2> probs{Dist2(0.5, 0.5), Dist2(0.9, 0.1), Dist2(0.01, 0.99)};
  const std::vector<int> gold{1, 0, 0};
  const auto masked = pair_loss(probs, gold, {1, 1, 0}, 0.4);
  const auto trimmed = pair_loss({probs[0], probs[1]}, {1, 0}, {1, 1}, 0.4);
  CHECK(masked.total == trimmed.total);
  CHECK(masked.n_negative == 1);
}

TEST_CASE("total loss arithmetic") {
  const LossWeights w{1.0, 1.0, 2.5, 0.4};
  CHECK(total_loss(0.2, 0.4, 0.1, w) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(total_loss(0, 0, 0, w) == 0.0);
  const LossWeights pair_only{0.0, 0.0, 2.5, 0.4};
  CHECK(total_loss(7.0, 9.0, 0.1, pair_only) == doctest::Approx(0.25));
}

TEST_CASE("a NaN component is named in the error") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const LossWeights w;
  auto message = [&](double e, double c, double p) {
    try {
      total_loss(e, c, p, w);
    } catch (const Error& ex) {
      return std::string(ex.what());
    }
    return std::string();
  };
  CHECK(message(nan, 0.1, 0.1).find("L_e") != std::string::npos);
  CHECK(message(0.1, nan, 0.1).find("L_c") != std::string::npos);
  CHECK(message(0.1, 0.1, nan).find("L_p") != std::string::npos);
}

TEST_CASE("cross-entropy logit gradient matches finite differences and vanishes under the clamp") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Dist2 logits(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const int label = static_cast<int>(rng.below(2));
    const Dist2 g = cross_entropy_logit_grad(softmax2(logits), label);
    for (int k = 0; k < 2; ++k) {
      Dist2 up = logits, down = logits;
      up(k) += 1e-6;
      down(k) -= 1e-6;
      const double num = (cross_entropy(softmax2(up), label) - cross_entropy(softmax2(down), label)) / 2e-6;
      CHECK(g(k) == doctest::Approx(num).epsilon(1e-6));
    }
  }
  CHECK(cross_entropy_logit_grad(softmax2(Dist2(0.0, 40.0)), 0).isZero(0.0));
}

TEST_CASE("clause loss is the mean cross-entropy") {
  const std::vector<Dist2> probs{Dist2(0.2, 0.8), Dist2(0.6, 0.4)};
  CHECK(clause_loss(probs, {1, 0}) == doctest::Approx(-(std::log(0.8) + std::log(0.6)) / 2));
}

TEST_CASE("l2 penalty covers decayed weights only") {
  ParameterStore store;
  auto& w = store.add("W", 2, 2, true);
  auto& b = store.add("b", 2, 1, false);
  w.value << 1, 2, 3, 4;
  b.value << 100, 100;
  CHECK(l2_penalty(store, 0.5) == doctest::Approx(15.0));
  store.zero_grad();
  add_l2_gradient(store, 0.5);
  CHECK(w.grad == w.value);
  CHECK(b.grad.isZero(0.0));
}

TEST_CASE("loss weights validation") {
  CHECK_NOTHROW(LossWeights{}.validate());
  CHECK_THROWS(LossWeights{1, 1, -1, 0.4}.validate());
  CHECK_THROWS(LossWeights{1, 1, 2.5, -0.1}.validate());
}
