#include "ecpe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace ecpe::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad value for " + key + ": '" + value + "' (expected true/false)");
}

std::string num(double x) { return json(x).dump(); }

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path manifest_path(const fs::path& data_dir) { return data_dir / "manifest.json"; }

fs::path vocab_path(const fs::path& data_dir, int split) {
  return data_dir / "vocab" / ("split_" + std::to_string(split) + ".txt");
}

std::string split_dir_name(int split) { return "split_" + std::to_string(split); }

// Documents of one named set ("train", "val" or "test").
std::vector<corpus::Document> documents_for(const std::vector<corpus::Document>& all, const corpus::Split& split,
                                            const std::string& set) {
  if (set == "train") return corpus::select(all, split.train);
  if (set == "val") return corpus::select(all, split.val);
  if (set == "test") return corpus::select(all, split.test);
  throw ConfigError("unknown evaluation set '" + set + "' (expected train, val or test)");
}

struct Prepared {
  json manifest;
  std::vector<corpus::Document> documents;
  corpus::SplitSet splits;
};

Prepared read_prepared(const fs::path& data_dir) {
  if (!fs::exists(manifest_path(data_dir))) {
    throw Error("no prepared data in " + data_dir.string() + " (run 'ecpe prepare' first)");
  }
  Prepared p;
  p.manifest = read_json(manifest_path(data_dir));
  p.documents = corpus::parse_corpus(fs::path(p.manifest.at("corpus").get<std::string>()));
  p.splits = corpus::read_split_set(data_dir / p.manifest.at("split_file").get<std::string>());
  return p;
}

const corpus::Split& split_at(const corpus::SplitSet& set, int split) {
  if (split < 0 || split >= static_cast<int>(set.splits.size())) {
    throw ConfigError("split " + std::to_string(split) + " out of range (have " + std::to_string(set.splits.size()) +
                      ")");
  }
  return set.splits[static_cast<std::size_t>(split)];
}

json checkpoint_metadata(const ExperimentConfig& config, int split, const TrainRun& run) {
  return json{{"data_dir", fs::absolute(config.data_dir).lexically_normal().string()},
              {"split", split},
              {"seed", config.train.seed},
              {"max_clauses", config.caps.max_clauses},
              {"max_tokens", config.caps.max_tokens},
              {"threshold", config.train.threshold},
              {"best_epoch", run.state.best_epoch},
              {"config", to_key_values(config)}};
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<std::string> config_keys() {
  return {"data_dir",      "out_dir",        "split",          "min_count",      "max_clauses",
          "max_tokens",    "embed_dim",      "word_hidden",    "attention_dim",  "clause_hidden",
          "pos_dim",       "pair_hidden",    "pair_depth",     "clip_distance",  "use_positional",
          "variant",       "gold_labels_available", "detach_signal", "learning_rate", "batch_size",
          "epochs",        "dropout",        "dropout_is_keep_prob", "l2",       "init_bound",
          "seed",          "threshold",      "lambda_c",       "lambda_e",       "lambda_p",
          "loss_weight"};
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void set_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto as_int = [&] { return parse_number<int>(key, value); };
  auto as_double = [&] { return parse_number<double>(key, value); };
  auto as_bool = [&] { return parse_bool(key, value); };

  if (key == "data_dir") c.data_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "split") c.split = as_int();
  else if (key == "min_count") c.min_count = as_int();
  else if (key == "max_clauses") c.caps.max_clauses = as_int();
  else if (key == "max_tokens") c.caps.max_tokens = as_int();
  else if (key == "embed_dim") c.model.embed_dim = as_int();
  else if (key == "word_hidden") c.model.word_hidden = as_int();
  else if (key == "attention_dim") c.model.attention_dim = as_int();
  else if (key == "clause_hidden") c.model.clause_hidden = as_int();
  else if (key == "pos_dim") c.model.pos_dim = as_int();
  else if (key == "pair_hidden") c.model.pair_hidden = as_int();
  else if (key == "pair_depth") c.model.pair_depth = as_int();
  else if (key == "clip_distance") c.model.clip_distance = as_int();
  else if (key == "use_positional") c.model.use_positional = as_bool();
  else if (key == "variant") {
    try {
      c.model.variant.variant = encoder::parse_variant(value);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "gold_labels_available") c.model.variant.gold_labels_available = as_bool();
  else if (key == "detach_signal") c.model.variant.detach_signal = as_bool();
  else if (key == "learning_rate") c.train.learning_rate = as_double();
  else if (key == "batch_size") c.train.batch_size = as_int();
  else if (key == "epochs") c.train.epochs = as_int();
  else if (key == "dropout") c.train.dropout = as_double();
  else if (key == "dropout_is_keep_prob") c.train.dropout_is_keep_prob = as_bool();
  else if (key == "l2") c.train.l2 = as_double();
  else if (key == "init_bound") c.train.init_bound = as_double();
  else if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threshold") c.train.threshold = as_double();
  else if (key == "lambda_c") c.train.weights.lambda_c = as_double();
  else if (key == "lambda_e") c.train.weights.lambda_e = as_double();
  else if (key == "lambda_p") c.train.weights.lambda_p = as_double();
  else if (key == "loss_weight") c.train.weights.loss_weight = as_double();
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig load_config(const fs::path& path) {
  ExperimentConfig c;
  for (const auto& [k, v] : read_key_values(path)) set_key(c, k, v);
  return c;
}

std::string to_key_values(const ExperimentConfig& c) {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  std::ostringstream o;
  o << "data_dir = " << c.data_dir << "\n"
    << "out_dir = " << c.out_dir << "\n"
    << "split = " << c.split << "\n"
    << "min_count = " << c.min_count << "\n"
    << "max_clauses = " << c.caps.max_clauses << "\n"
    << "max_tokens = " << c.caps.max_tokens << "\n"
    << "embed_dim = " << c.model.embed_dim << "\n"
    << "word_hidden = " << c.model.word_hidden << "\n"
    << "attention_dim = " << c.model.attention_dim << "\n"
    << "clause_hidden = " << c.model.clause_hidden << "\n"
    << "pos_dim = " << c.model.pos_dim << "\n"
    << "pair_hidden = " << c.model.pair_hidden << "\n"
    << "pair_depth = " << c.model.pair_depth << "\n"
    << "clip_distance = " << c.model.clip_distance << "\n"
    << "use_positional = " << b(c.model.use_positional) << "\n"
    << "variant = " << encoder::to_string(c.model.variant.variant) << "\n"
    << "gold_labels_available = " << b(c.model.variant.gold_labels_available) << "\n"
    << "detach_signal = " << b(c.model.variant.detach_signal) << "\n"
    << "learning_rate = " << num(c.train.learning_rate) << "\n"
    << "batch_size = " << c.train.batch_size << "\n"
    << "epochs = " << c.train.epochs << "\n"
    << "dropout = " << num(c.train.dropout) << "\n"
    << "dropout_is_keep_prob = " << b(c.train.dropout_is_keep_prob) << "\n"
    << "l2 = " << num(c.train.l2) << "\n"
    << "init_bound = " << num(c.train.init_bound) << "\n"
    << "seed = " << c.train.seed << "\n"
    << "threshold = " << num(c.train.threshold) << "\n"
    << "lambda_c = " << num(c.train.weights.lambda_c) << "\n"
    << "lambda_e = " << num(c.train.weights.lambda_e) << "\n"
    << "lambda_p = " << num(c.train.weights.lambda_p) << "\n"
    << "loss_weight = " << num(c.train.weights.loss_weight) << "\n";
  return o.str();
}

PrepareResult prepare(const fs::path& corpus_path, const fs::path& embeddings_path, std::uint64_t seed,
                      const fs::path& out_dir, int min_count, int embed_dim) {
  if (!fs::exists(corpus_path)) throw Error("corpus not found: " + corpus_path.string());
  if (!fs::exists(embeddings_path)) throw Error("embeddings not found: " + embeddings_path.string());
  if (min_count < 1) throw ConfigError("min_count must be >= 1");

  const auto docs = corpus::parse_corpus(corpus_path);
  PrepareResult result;
  result.documents = docs.size();
  result.splits = corpus::make_splits(docs, seed);

  // Reading the file against the full-corpus vocabulary surfaces dimension
  // errors now rather than at training time.
  const auto full_vocab = corpus::build_vocabulary(docs, 1);
  const auto coverage = corpus::load_embeddings(embeddings_path, full_vocab, seed, embed_dim);

  fs::create_directories(out_dir / "vocab");
  corpus::write_split_set(result.splits, out_dir / "splits.json");
  json vocab_files = json::array();
  for (std::size_t k = 0; k < result.splits.splits.size(); ++k) {
    const auto train_docs = corpus::select(docs, result.splits.splits[k].train);
    const auto vocab = corpus::build_vocabulary(train_docs, min_count);
    const auto path = vocab_path(out_dir, static_cast<int>(k));
    vocab.save(path);
    vocab_files.push_back(fs::relative(path, out_dir).generic_string());
  }

  const json manifest{{"corpus", fs::absolute(corpus_path).lexically_normal().string()},
                      {"embeddings", fs::absolute(embeddings_path).lexically_normal().string()},
                      {"seed", seed},
                      {"documents", docs.size()},
                      {"split_count", result.splits.splits.size()},
                      {"split_file", "splits.json"},
                      {"vocab_files", vocab_files},
                      {"min_count", min_count},
                      {"embed_dim", embed_dim},
                      {"corpus_tokens", full_vocab.size() - 2},
                      {"corpus_tokens_with_vectors", coverage.found}};
  write_json(manifest_path(out_dir), manifest);
  write_json(out_dir / "prepare.meta.json", json{{"created_at", timestamp()}});
  return result;
}

SplitData load_split(const ExperimentConfig& config, int split) {
  const auto prepared = read_prepared(config.data_dir);
  const auto& s = split_at(prepared.splits, split);
  SplitData out;
  out.split = split;
  out.vocab = corpus::Vocabulary::load(vocab_path(config.data_dir, split));
  const int dim = prepared.manifest.value("embed_dim", corpus::kEmbeddingDim);
  if (dim != config.model.embed_dim) {
    throw ConfigError("embed_dim " + std::to_string(config.model.embed_dim) + " does not match prepared embeddings (" +
                      std::to_string(dim) + ")");
  }
  out.embeddings = corpus::load_embeddings(fs::path(prepared.manifest.at("embeddings").get<std::string>()), out.vocab,
                                           mix_seed(config.train.seed, 7), dim);
  out.train = model::encode_documents(corpus::select(prepared.documents, s.train), out.vocab, config.caps);
  out.val = model::encode_documents(corpus::select(prepared.documents, s.val), out.vocab, config.caps);
  out.test = model::encode_documents(corpus::select(prepared.documents, s.test), out.vocab, config.caps);
  return out;
}

TrainRun run_train(const ExperimentConfig& config, int split, const fs::path& dir) {
  config.train.validate();
  const std::string started = timestamp();
  auto data = load_split(config, split);

  model::ModelConfig mc = config.model;
  mc.vocab_size = data.vocab.size();
  mc.validate();
  model::Model m(mc, config.train.seed, config.train.init_bound);
  m.set_embeddings(data.embeddings.vectors);

  fs::create_directories(dir);
  write_text(dir / "config.txt", to_key_values(config));
  std::ofstream log(dir / "train_log.jsonl", std::ios::binary);
  if (!log) throw Error("cannot write " + (dir / "train_log.jsonl").string());

  TrainRun run;
  run.dir = dir;
  try {
    run.state = training::train(m, data.train, data.val, config.train, [&](const training::EpochRecord& rec) {
      log << training::epoch_log_record(rec).dump() << "\n";
      log.flush();
    });
  } catch (const training::TrainingDiverged& e) {
    const auto& st = e.state();
    write_json(dir / "train_state.json", json{{"status", "diverged"},
                                             {"error", e.what()},
                                             {"epochs_completed", st.epochs_completed},
                                             {"best_epoch", st.best_epoch},
                                             {"best_val_pair_f1", st.best_val_pair_f1}});
    throw;
  }

  auto val = training::evaluate(m, data.val, config.train.threshold, config.train.batch_size);
  auto test = training::evaluate(m, data.test, config.train.threshold, config.train.batch_size);
  run.validation = val.report;
  run.validation.split = split;
  run.validation.set = "val";
  run.test = test.report;
  run.test.split = split;
  run.test.set = "test";
  run.params = training::count_trainable_params(m);

  write_json(dir / "train_state.json", json{{"status", "completed"},
                                           {"epochs_completed", run.state.epochs_completed},
                                           {"best_epoch", run.state.best_epoch},
                                           {"best_val_pair_f1", run.state.best_val_pair_f1}});
  write_json(dir / "report.json", json{{"validation", metrics::to_json(run.validation)},
                                       {"test", metrics::to_json(run.test)}});
  write_json(dir / "params.json", training::to_json(run.params));
  checkpoint::save(dir / "checkpoint.bin", m, data.vocab, checkpoint_metadata(config, split, run));
  write_json(dir / "run.meta.json", json{{"started_at", started}, {"finished_at", timestamp()}});
  return run;
}

std::vector<TrainRun> run_train_all(const ExperimentConfig& config, const fs::path& dir) {
  const auto prepared = read_prepared(config.data_dir);
  std::vector<TrainRun> runs;
  std::vector<metrics::EvaluationReport> tests;
  for (std::size_t k = 0; k < prepared.splits.splits.size(); ++k) {
    ExperimentConfig c = config;
    c.split = static_cast<int>(k);
    runs.push_back(run_train(c, c.split, dir / split_dir_name(c.split)));
    tests.push_back(runs.back().test);
  }
  const auto agg = metrics::aggregate_splits(tests, static_cast<int>(tests.size()));
  write_json(dir / "summary.json", metrics::report_document(tests, agg));
  return runs;
}

EvalMode parse_eval_mode(const std::string& text) {
  if (text == "ecpe") return EvalMode::Ecpe;
  if (text == "ece") return EvalMode::Ece;
  throw ConfigError("unknown eval mode '" + text + "' (expected ecpe or ece)");
}

json prediction_record(const model::DocumentOutput& output, double threshold) {
  const int d = output.size();
  json pairs = json::array();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double p = output.pairs[static_cast<std::size_t>(i * d + j)](1);
      if (p > threshold) pairs.push_back(json::array({i, j, p}));
    }
  }
  json emotion = json::array(), cause = json::array();
  for (const auto& e : output.emotion) emotion.push_back(e(1));
  for (const auto& c : output.cause) cause.push_back(c(1));
  return json{{"doc_id", output.doc_id}, {"pairs", pairs}, {"emotion", emotion}, {"cause", cause}};
}

metrics::EvaluationReport run_eval(const fs::path& checkpoint_path, const EvalOptions& options) {
  auto ckpt = checkpoint::load(checkpoint_path);
  const auto variant = ckpt.model.config().variant.variant;
  const bool injects_labels = variant == encoder::Variant::CExt || variant == encoder::Variant::EExt;
  if (options.mode == EvalMode::Ece && !injects_labels) {
    throw ConfigError("ece mode needs a checkpoint that takes gold labels (cext or eext); this one is " +
                      encoder::to_string(variant));
  }
  if (options.mode == EvalMode::Ecpe && injects_labels) {
    throw ConfigError("ecpe mode uses no annotations at test time; a " + encoder::to_string(variant) +
                      " checkpoint needs --mode ece");
  }

  const auto& meta = ckpt.metadata;
  const fs::path data_dir = options.data_dir.empty() ? fs::path(meta.at("data_dir").get<std::string>())
                                                     : fs::path(options.data_dir);
  const int split = options.split >= 0 ? options.split : meta.value("split", 0);
  const double threshold = meta.value("threshold", pairing::kDecisionThreshold);
  model::Caps caps{meta.value("max_clauses", 30), meta.value("max_tokens", 40)};

  const auto prepared = read_prepared(data_dir);
  const auto docs = documents_for(prepared.documents, split_at(prepared.splits, split), options.set);
  const auto encoded = model::encode_documents(docs, ckpt.vocabulary, caps);
  auto result = training::evaluate(ckpt.model, encoded, threshold);
  result.report.split = split;
  result.report.set = options.set;

  if (!options.predictions.empty()) {
    std::ostringstream out;
    for (const auto& o : result.outputs) out << prediction_record(o, threshold).dump() << "\n";
    write_text(options.predictions, out.str());
  }
  return result.report;
}

AblationResult run_ablate_positional(const ExperimentConfig& config, const fs::path& dir) {
  ExperimentConfig with = config;
  with.model.use_positional = true;
  ExperimentConfig without = config;
  without.model.use_positional = false;

  AblationResult r;
  r.with_positional = run_train(with, config.split, dir / "with_pe");
  r.without_positional = run_train(without, config.split, dir / "without_pe");

  const auto& a = r.with_positional;
  const auto& b = r.without_positional;
  r.delta = json{{"split", config.split},
                 {"seed", config.train.seed},
                 {"variant", encoder::to_string(config.model.variant.variant)},
                 {"val_f1_with", a.validation.pair.f1},
                 {"val_f1_without", b.validation.pair.f1},
                 {"val_f1_delta", a.validation.pair.f1 - b.validation.pair.f1},
                 {"test_f1_with", a.test.pair.f1},
                 {"test_f1_without", b.test.pair.f1},
                 {"test_f1_delta", a.test.pair.f1 - b.test.pair.f1},
                 {"params_with", a.params.without_embeddings},
                 {"params_without", b.params.without_embeddings},
                 {"param_difference", static_cast<long long>(a.params.without_embeddings) -
                                          static_cast<long long>(b.params.without_embeddings)}};
  write_json(dir / "delta.json", r.delta);
  write_json(dir / "reports.json", json{{"with_pe", {{"validation", metrics::to_json(a.validation)},
                                                     {"test", metrics::to_json(a.test)}}},
                                        {"without_pe", {{"validation", metrics::to_json(b.validation)},
                                                        {"test", metrics::to_json(b.test)}}}});
  return r;
}

std::vector<double> default_sweep_weights() {
  std::vector<double> w;
  for (int k = 1; k <= 10; ++k) w.push_back(k / 10.0);
  return w;
}

int worker_limit() {
  const char* env = std::getenv("ECPE_NUM_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  int n = 1;
  const auto* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, n);
  if (ec != std::errc{} || ptr != end) throw ConfigError(std::string("bad ECPE_NUM_WORKERS: '") + env + "'");
  return std::max(1, n);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "weight,P,R,F1,predicted_count\n";
  for (const auto& r : rows) {
    out << num(r.loss_weight) << "," << num(r.precision) << "," << num(r.recall) << "," << num(r.f1) << ","
        << num(r.predicted_count) << "\n";
  }
  return out.str();
}

SweepResult run_sweep(const ExperimentConfig& config, std::vector<double> weights,
                      const std::vector<std::uint64_t>& seeds, const fs::path& dir, int workers) {
  if (weights.size() < 2) throw ConfigError("a sweep needs at least two loss weights");
  if (seeds.empty()) throw ConfigError("a sweep needs at least one seed");
  std::sort(weights.begin(), weights.end());
  if (std::adjacent_find(weights.begin(), weights.end()) != weights.end()) {
    throw ConfigError("duplicate loss weight in sweep");
  }
  for (double w : weights) {
    if (!(w > 0.0 && w <= 1.0)) throw ConfigError("loss weight " + num(w) + " outside (0, 1]");
  }

  struct Job {
    double weight;
    std::uint64_t seed;
    metrics::EvaluationReport val, test;
  };
  std::vector<Job> jobs;
  for (double w : weights)
    for (auto s : seeds) jobs.push_back({w, s, {}, {}});

  // Each job owns its output directory, so workers share nothing but the
  // job counter and the first error.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      auto& job = jobs[k];
      try {
        ExperimentConfig c = config;
        c.train.weights.loss_weight = job.weight;
        c.train.seed = job.seed;
        const auto sub = dir / ("weight_" + num(job.weight)) / ("seed_" + std::to_string(job.seed));
        const auto run = run_train(c, c.split, sub);
        job.val = run.validation;
        job.test = run.test;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(jobs.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  const double per = static_cast<double>(seeds.size());
  for (std::size_t wi = 0; wi < weights.size(); ++wi) {
    SweepRow v{weights[wi]}, t{weights[wi]};
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& job = jobs[wi * seeds.size() + si];
      v.precision += job.val.pair.precision / per;
      v.recall += job.val.pair.recall / per;
      v.f1 += job.val.pair.f1 / per;
      v.predicted_count += static_cast<double>(job.val.pair.proposed) / per;
      t.precision += job.test.pair.precision / per;
      t.recall += job.test.pair.recall / per;
      t.f1 += job.test.pair.f1 / per;
      t.predicted_count += static_cast<double>(job.test.pair.proposed) / per;
    }
    result.validation.push_back(v);
    result.test.push_back(t);
  }

  auto rows_json = [](const std::vector<SweepRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
      a.push_back({{"loss_weight", r.loss_weight},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"f1", r.f1},
                   {"predicted_count", r.predicted_count}});
    }
    return a;
  };
  write_text(dir / "sweep_val.csv", sweep_csv(result.validation));
  write_text(dir / "sweep_test.csv", sweep_csv(result.test));
  write_json(dir / "sweep.json", json{{"split", config.split},
                                      {"seeds", seeds},
                                      {"variant", encoder::to_string(config.model.variant.variant)},
                                      {"validation", rows_json(result.validation)},
                                      {"test", rows_json(result.test)}});
  write_json(dir / "plot.json", json{{"title", "Pair extraction vs negative-example weight"},
                                     {"mark", "line"},
                                     {"data", "sweep_val.csv"},
                                     {"alternate_data", "sweep_test.csv"},
                                     {"x", {{"field", "weight"}, {"label", "loss weight"}}},
                                     {"y", {{"fields", {"P", "R", "F1"}}, {"label", "score"}}}});
  return result;
}

json aggregate_report_files(const std::vector<fs::path>& paths, int expected_splits) {
  std::vector<metrics::EvaluationReport> reports;
  for (const auto& p : paths) {
    const json j = read_json(p);
    try {
      if (j.contains("splits") && j.at("splits").is_array()) {
        for (const auto& r : j.at("splits")) reports.push_back(metrics::report_from_json(r));
      } else if (j.contains("test") && j.at("test").is_object()) {
        reports.push_back(metrics::report_from_json(j.at("test")));
      } else {
        reports.push_back(metrics::report_from_json(j));
      }
    } catch (const json::exception& e) {
      throw Error(p.string() + ": not an evaluation report (" + e.what() + ")");
    }
  }
  const auto agg = metrics::aggregate_splits(reports, expected_splits);
  return metrics::report_document(reports, agg);
}

FixturePaths write_synthetic_fixture(const fs::path& dir, const corpus::SyntheticOptions& options, std::uint64_t seed,
                                     int dim) {
  FixturePaths paths{dir / "corpus.jsonl", dir / "embeddings.txt"};
  fs::create_directories(dir);
  corpus::write_corpus(corpus::make_synthetic_corpus(options, seed), paths.corpus);
  const auto lexicon = corpus::synthetic_lexicon();
  Rng rng(mix_seed(seed, 3));
  Matrix vectors(static_cast<Eigen::Index>(lexicon.size()), dim);
  for (Eigen::Index r = 0; r < vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors(r, c) = rng.uniform(-0.5, 0.5);
  corpus::write_embeddings(paths.embeddings, lexicon, vectors);
  return paths;
}

json parameter_report(const fs::path& checkpoint_path) {
  const auto ckpt = checkpoint::load(checkpoint_path);
  json j = training::to_json(training::count_trainable_params(ckpt.model));
  j["variant"] = encoder::to_string(ckpt.model.config().variant.variant);
  j["model_config"] = checkpoint::to_json(ckpt.model.config());
  return j;
}

}  // namespace ecpe::cli
