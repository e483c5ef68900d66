#include "ecpe/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ecpe::corpus {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) {
      return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    });
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

Document parse_document(const std::string& line, std::size_t line_number) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
  }
  if (!record.is_object()) throw ParseError(line_number, "record is not a JSON object");

  Document doc;
  try {
    doc.doc_id = record.at("doc_id").get<std::string>();
    const auto& clauses = record.at("clauses");
    if (!clauses.is_array() || clauses.empty()) {
      throw ParseError(line_number, "\"clauses\" must be a non-empty array");
    }
    for (const auto& c : clauses) {
      Clause clause;
      clause.raw_text = c.get<std::string>();
      clause.tokens = tokenize(clause.raw_text);
      doc.clauses.push_back(std::move(clause));
    }
    const auto& pairs = record.at("pairs");
    if (!pairs.is_array()) throw ParseError(line_number, "\"pairs\" must be an array");
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2) {
        throw ParseError(line_number, "each pair must be [emotion_index, cause_index]");
      }
      doc.gold_pairs.emplace(p[0].get<int>(), p[1].get<int>());
    }
  } catch (const json::exception& e) {
    throw ParseError(line_number, std::string("bad record: ") + e.what());
  }
  // emotion_categories and keywords are accepted and ignored.

  const int d = doc.size();
  for (int i = 0; i < d; ++i) {
    if (doc.clauses[static_cast<std::size_t>(i)].tokens.empty()) {
      throw ValidationError("document " + doc.doc_id + ": clause " + std::to_string(i) + " is empty");
    }
  }
  for (const auto& [e, c] : doc.gold_pairs) {
    if (e < 0 || e >= d || c < 0 || c >= d) {
      throw ValidationError("document " + doc.doc_id + ": pair [" + std::to_string(e) + "," +
                            std::to_string(c) + "] out of range for " + std::to_string(d) + " clauses");
    }
  }
  return doc;
}

std::vector<Document> parse_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc = parse_document(line, line_number);
    if (!seen.insert(doc.doc_id).second) {
      throw ValidationError("duplicate doc_id " + doc.doc_id + " at line " + std::to_string(line_number));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

std::string serialize_document(const Document& doc) {
  json record;
  record["doc_id"] = doc.doc_id;
  json clauses = json::array();
  for (const auto& c : doc.clauses) clauses.push_back(c.raw_text);
  record["clauses"] = std::move(clauses);
  json pairs = json::array();
  for (const auto& [e, c] : doc.gold_pairs) pairs.push_back({e, c});
  record["pairs"] = std::move(pairs);
  return record.dump();
}

void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path.string());
  for (const auto& doc : docs) out << serialize_document(doc) << '\n';
}

ClauseLabels derive_clause_labels(const Document& doc) {
  const auto d = static_cast<std::size_t>(doc.size());
  ClauseLabels labels{std::vector<int>(d, 0), std::vector<int>(d, 0)};
  for (const auto& [e, c] : doc.gold_pairs) {
    labels.emotion[static_cast<std::size_t>(e)] = 1;
    labels.cause[static_cast<std::size_t>(c)] = 1;
  }
  return labels;
}

std::vector<PairCandidate> enumerate_pair_candidates(const Document& doc) {
  const int d = doc.size();
  std::vector<PairCandidate> out;
  out.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      out.push_back({i, j, doc.gold_pairs.count({i, j}) ? 1 : 0});
    }
  }
  return out;
}

SplitSet make_splits(const std::vector<Document>& corpus, std::uint64_t master_seed, int split_count) {
  const std::size_t n = corpus.size();
  if (n < 10) throw ValidationError("corpus too small for splitting: " + std::to_string(n) + " documents (need >= 10)");
  if (split_count < 1) throw ValidationError("split count must be positive");

  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;

  SplitSet out;
  out.master_seed = master_seed;
  Rng seeder(master_seed);
  std::set<std::uint64_t> used;
  for (int k = 0; k < split_count; ++k) {
    std::uint64_t seed;
    do {
      seed = seeder.next();
    } while (!used.insert(seed).second);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    Split split;
    split.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& id = corpus[order[i]].doc_id;
      if (i < n_train) {
        split.train.push_back(id);
      } else if (i < n_train + n_val) {
        split.val.push_back(id);
      } else {
        split.test.push_back(id);
      }
    }
    out.splits.push_back(std::move(split));
  }
  return out;
}

std::string split_set_to_json(const SplitSet& splits) {
  json root;
  root["master_seed"] = splits.master_seed;
  json arr = json::array();
  for (const auto& s : splits.splits) {
    arr.push_back({{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}});
  }
  root["splits"] = std::move(arr);
  return root.dump(1);
}

SplitSet split_set_from_json(const std::string& text) {
  SplitSet out;
  try {
    const json root = json::parse(text);
    out.master_seed = root.at("master_seed").get<std::uint64_t>();
    for (const auto& s : root.at("splits")) {
      Split split;
      split.seed = s.value("seed", std::uint64_t{0});
      split.train = s.at("train").get<std::vector<std::string>>();
      split.val = s.at("val").get<std::vector<std::string>>();
      split.test = s.at("test").get<std::vector<std::string>>();
      out.splits.push_back(std::move(split));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("bad split file: ") + e.what());
  }
  return out;
}

void write_split_set(const SplitSet& splits, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write split file " + path.string());
  out << split_set_to_json(splits) << '\n';
}

SplitSet read_split_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open split file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return split_set_from_json(buf.str());
}

std::vector<Document> select(const std::vector<Document>& corpus, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus) by_id.emplace(d.doc_id, &d);
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("split references unknown doc_id " + id);
    out.push_back(*it->second);
  }
  return out;
}

namespace {

const std::vector<std::string> kEmotionWords = {
    "happy", "furious", "sad", "afraid", "surprised", "ashamed",
    "angry", "delighted", "jealous", "lonely", "proud", "disgusted"};
const std::vector<std::string> kCauseWords = {
    "party", "gift", "accident", "insult", "letter", "storm",
    "wedding", "funeral", "promotion", "betrayal", "debt", "rumor"};
const std::vector<std::string> kFillerWords = {
    "the", "a", "she", "he", "they", "was", "at", "of", "in", "on",
    "to", "her", "his", "with", "after", "day", "house", "road", "night", "morning",
    "friend", "door", "window", "table", "street", "city", "old", "long", "then", "still"};

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

}  // namespace

std::vector<std::string> synthetic_lexicon() {
  std::vector<std::string> out = kEmotionWords;
  out.insert(out.end(), kCauseWords.begin(), kCauseWords.end());
  out.insert(out.end(), kFillerWords.begin(), kFillerWords.end());
  return out;
}

std::vector<Document> make_synthetic_corpus(const SyntheticOptions& opt, std::uint64_t seed) {
  if (opt.min_clauses < 1 || opt.max_clauses < opt.min_clauses || opt.max_pairs < 1 ||
      opt.min_tokens < 1 || opt.max_tokens < opt.min_tokens) {
    throw ConfigError("invalid synthetic corpus options");
  }
  Rng rng(seed);
  const std::vector<int> offsets = {0, 1, 1, -1, 2};
  std::vector<Document> docs;
  for (int n = 0; n < opt.documents; ++n) {
    const int d = opt.min_clauses + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_clauses - opt.min_clauses + 1)));
    const int want = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_pairs)));

    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04d", n);
    doc.doc_id = id;
    for (int attempt = 0; static_cast<int>(doc.gold_pairs.size()) < want && attempt < 64; ++attempt) {
      const int e = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
      const int c = e + pick(rng, offsets);
      if (c < 0 || c >= d) continue;
      doc.gold_pairs.emplace(e, c);
    }
    if (doc.gold_pairs.empty()) doc.gold_pairs.emplace(0, 0);

    std::vector<int> is_emotion(static_cast<std::size_t>(d), 0), is_cause(static_cast<std::size_t>(d), 0);
    for (const auto& [e, c] : doc.gold_pairs) {
      is_emotion[static_cast<std::size_t>(e)] = 1;
      is_cause[static_cast<std::size_t>(c)] = 1;
    }
    for (int i = 0; i < d; ++i) {
      const int len = opt.min_tokens + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_tokens - opt.min_tokens + 1)));
      std::vector<std::string> toks;
      for (int t = 0; t < len; ++t) toks.push_back(pick(rng, kFillerWords));
      if (is_emotion[static_cast<std::size_t>(i)]) {
        toks.insert(toks.begin() + static_cast<long>(rng.below(toks.size() + 1)), pick(rng, kEmotionWords));
      }
      if (is_cause[static_cast<std::size_t>(i)]) {
        toks.insert(toks.begin() + static_cast<long>(rng.below(toks.size() + 1)), pick(rng, kCauseWords));
      }
      Clause clause;
      for (std::size_t t = 0; t < toks.size(); ++t) {
        if (t) clause.raw_text += ' ';
        clause.raw_text += toks[t];
      }
      clause.tokens = std::move(toks);
      doc.clauses.push_back(std::move(clause));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace ecpe::corpus
