#include "ecpe/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace ecpe::corpus {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{kPadToken, kUnkToken}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, int min_count)
    : tokens_(std::move(tokens)), min_count_(min_count) {
  if (tokens_.size() < 2 || tokens_[0] != kPadToken || tokens_[1] != kUnkToken) {
    throw ValidationError("vocabulary must start with <pad> and <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token " + tokens_[i]);
    }
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  out << "# min_count " << min_count_ << '\n';
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::string line;
  int min_count = 1;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (line.rfind("# min_count ", 0) == 0) {
      min_count = std::stoi(line.substr(12));
      continue;
    }
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens), min_count);
}

Vocabulary build_vocabulary(const std::vector<Document>& train_docs, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, int> freq;
  for (const auto& doc : train_docs) {
    for (const auto& clause : doc.clauses) {
      for (const auto& t : clause.tokens) ++freq[t];
    }
  }
  std::vector<std::pair<std::string, int>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_count && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{Vocabulary::kPadToken, Vocabulary::kUnkToken};
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary(std::move(tokens), min_count);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                std::uint64_t seed, int dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file " + path.string());

  EmbeddingMatrix out;
  out.vectors.resize(vocab.size(), dim);
  Rng rng(seed);
  for (int r = 0; r < vocab.size(); ++r) {
    for (int c = 0; c < dim; ++c) out.vectors(r, c) = rng.uniform(-0.1, 0.1);
  }

  std::vector<char> seen(static_cast<std::size_t>(vocab.size()), 0);
  std::string line;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    values.clear();
    std::string num;
    while (fields >> num) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        throw Error("embeddings: bad value '" + num + "' for token " + token);
      }
      values.push_back(v);
    }
    if (static_cast<int>(values.size()) != dim) {
      throw Error("embeddings: token " + token + " has " + std::to_string(values.size()) +
                  " values, expected " + std::to_string(dim));
    }
    if (!vocab.contains(token)) continue;
    const int id = vocab.id(token);
    if (id == Vocabulary::kPad) continue;
    for (int c = 0; c < dim; ++c) out.vectors(id, c) = values[static_cast<std::size_t>(c)];
    if (!seen[static_cast<std::size_t>(id)]) {
      seen[static_cast<std::size_t>(id)] = 1;
      ++out.found;
    }
  }
  out.vectors.row(Vocabulary::kPad).setZero();
  return out;
}

void write_embeddings(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                      const Matrix& vectors) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write embeddings " + path.string());
  out.precision(17);
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    out << tokens[r];
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) out << ' ' << vectors(static_cast<Eigen::Index>(r), c);
    out << '\n';
  }
}

}  // namespace ecpe::corpus
