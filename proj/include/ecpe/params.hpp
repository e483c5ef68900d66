#pragma once

#include "ecpe/common.hpp"

#include <deque>
#include <string>
#include <vector>

namespace ecpe {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decayed = false;    // receives the L2 penalty
  bool embedding = false;  // word embedding table
};

// Named trainable tensors. Element addresses are stable for the lifetime of
// the store, so layers keep raw pointers into it.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, bool decayed = false);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad();
  void init_uniform(double bound, std::uint64_t seed);

  std::size_t count(bool include_embeddings) const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::deque<Parameter> params_;
};

class Adam {
 public:
  Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParameterStore& store);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace ecpe
