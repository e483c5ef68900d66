#pragma once

#include "ecpe/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace ecpe::corpus {

struct Clause {
  std::vector<std::string> tokens;  // lowercased, never empty
  std::string raw_text;
};

// A document D = [c_0 .. c_{d-1}] together with its gold emotion-cause pairs
// (emotion_index, cause_index), both 0-based.
struct Document {
  std::string doc_id;
  std::vector<Clause> clauses;
  std::set<ClausePair> gold_pairs;

  int size() const { return static_cast<int>(clauses.size()); }
};

struct ClauseLabels {
  std::vector<int> emotion;
  std::vector<int> cause;
};

struct PairCandidate {
  int emotion_index = 0;
  int cause_index = 0;
  int label = 0;
};

struct Split {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct SplitSet {
  std::uint64_t master_seed = 0;
  std::vector<Split> splits;

  bool operator==(const SplitSet&) const = default;
};

inline bool operator==(const Split& a, const Split& b) {
  return a.seed == b.seed && a.train == b.train && a.val == b.val && a.test == b.test;
}

inline constexpr int kDefaultSplitCount = 10;

// Whitespace split, ASCII lowercase.
std::vector<std::string> tokenize(const std::string& text);

// Parses one JSON record. Throws ParseError for malformed JSON or missing
// fields, ValidationError for out-of-range pair indices or empty clauses.
Document parse_document(const std::string& json_line, std::size_t line_number);

std::vector<Document> parse_corpus(std::istream& in);
std::vector<Document> parse_corpus(const std::filesystem::path& path);

std::string serialize_document(const Document& doc);
void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path);

ClauseLabels derive_clause_labels(const Document& doc);

// d*d candidates in row-major order (emotion index outer, cause index inner).
std::vector<PairCandidate> enumerate_pair_candidates(const Document& doc);

SplitSet make_splits(const std::vector<Document>& corpus, std::uint64_t master_seed,
                     int split_count = kDefaultSplitCount);

std::string split_set_to_json(const SplitSet& splits);
SplitSet split_set_from_json(const std::string& text);
void write_split_set(const SplitSet& splits, const std::filesystem::path& path);
SplitSet read_split_set(const std::filesystem::path& path);

// Selects documents by id, preserving the order of `ids`.
std::vector<Document> select(const std::vector<Document>& corpus, const std::vector<std::string>& ids);

// Synthetic documents with a learnable emotion/cause vocabulary: 2-6 clauses
// and 1-2 pairs per document.
struct SyntheticOptions {
  int documents = 50;
  int min_clauses = 2;
  int max_clauses = 6;
  int max_pairs = 2;
  int min_tokens = 3;
  int max_tokens = 7;
};

std::vector<Document> make_synthetic_corpus(const SyntheticOptions& options, std::uint64_t seed);

// Every token the synthetic generator can emit.
std::vector<std::string> synthetic_lexicon();

}  // namespace ecpe::corpus
