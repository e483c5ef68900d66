#include "ecpe/params.hpp"

namespace ecpe {

Parameter& ParameterStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols, bool decayed) {
  if (contains(name)) throw Error("duplicate parameter " + name);
  Parameter& p = params_.emplace_back();
  p.name = name;
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.decayed = decayed;
  return p;
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error("unknown parameter " + name);
}

const Parameter& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParameterStore::init_uniform(double bound, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    if (p.embedding) continue;
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = rng.uniform(-bound, bound);
    }
  }
}

std::size_t ParameterStore::count(bool include_embeddings) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.embedding && !include_embeddings) continue;
    n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw Error("snapshot does not match parameter store");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].value = values[i];
}

void Adam::step(ParameterStore& store) {
  auto& params = store.all();
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace ecpe
