#pragma once

#include "ecpe/common.hpp"
#include "ecpe/corpus.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace ecpe::corpus {

inline constexpr int kEmbeddingDim = 200;

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  // Rebuilds from an id-ordered token list whose first two entries are the
  // reserved PAD and UNK tokens.
  explicit Vocabulary(std::vector<std::string> tokens, int min_count = 1);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  int size() const { return static_cast<int>(tokens_.size()); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int min_count_ = 1;
};

// Tokens with training frequency >= min_count; ids assigned by descending
// frequency, ties broken lexicographically.
Vocabulary build_vocabulary(const std::vector<Document>& train_docs, int min_count = 1);

struct EmbeddingMatrix {
  Matrix vectors;  // |V| x dim
  int found = 0;   // rows copied from the pretrained file
};

// Rows for tokens present in the file are copied verbatim; all other rows
// (UNK included) are drawn from U(-0.1, 0.1) with `seed`; the PAD row is zero.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                std::uint64_t seed, int dim = kEmbeddingDim);

// Writes a pretrained-format text file: "token v1 ... v_dim" per line.
void write_embeddings(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                      const Matrix& vectors);

}  // namespace ecpe::corpus
