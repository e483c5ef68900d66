#pragma once

#include "ecpe/checkpoint.hpp"
#include "ecpe/corpus.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/model.hpp"
#include "ecpe/training.hpp"
#include "ecpe/vocab.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ecpe::cli {

namespace fs = std::filesystem;

// Everything a run needs. Config files are flat "key = value" lines whose
// keys are the field names below (see README for the full list).
struct ExperimentConfig {
  std::string data_dir = "prepared";
  std::string out_dir = "runs";
  int split = 0;
  int min_count = 1;
  model::Caps caps;
  model::ModelConfig model;
  training::TrainConfig train;
};

std::map<std::string, std::string> read_key_values(const fs::path& path);
void set_key(ExperimentConfig& config, const std::string& key, const std::string& value);
ExperimentConfig load_config(const fs::path& path);
std::string to_key_values(const ExperimentConfig& config);
std::vector<std::string> config_keys();

// Validates the corpus and embeddings, writes splits.json, per-split
// vocabularies and manifest.json into `out_dir`. Output bytes depend only on
// the inputs and the seed.
struct PrepareResult {
  corpus::SplitSet splits;
  std::size_t documents = 0;
};
PrepareResult prepare(const fs::path& corpus_path, const fs::path& embeddings_path, std::uint64_t seed,
                      const fs::path& out_dir, int min_count = 1, int embed_dim = corpus::kEmbeddingDim);

struct SplitData {
  int split = 0;
  corpus::Vocabulary vocab;
  corpus::EmbeddingMatrix embeddings;
  std::vector<model::EncodedDocument> train, val, test;
};

SplitData load_split(const ExperimentConfig& config, int split);

struct TrainRun {
  fs::path dir;
  training::TrainState state;
  metrics::EvaluationReport validation;
  metrics::EvaluationReport test;
  training::ParameterCount params;
};

// Trains on one split and writes checkpoint.bin, train_log.jsonl, params.json
// and config.txt into `dir`. A run.meta.json sidecar holds the wall-clock
// timestamp; nothing else depends on time.
TrainRun run_train(const ExperimentConfig& config, int split, const fs::path& dir);

enum class EvalMode { Ecpe, Ece };
EvalMode parse_eval_mode(const std::string& text);

struct EvalOptions {
  EvalMode mode = EvalMode::Ecpe;
  std::string set = "test";
  int split = -1;        // -1: the split the checkpoint was trained on
  std::string data_dir;  // overrides the checkpoint's data directory when set
  fs::path predictions;  // JSON-lines prediction dump, skipped when empty
};

metrics::EvaluationReport run_eval(const fs::path& checkpoint_path, const EvalOptions& options);

// One JSON-lines record per document.
nlohmann::json prediction_record(const model::DocumentOutput& output, double threshold);

struct AblationResult {
  TrainRun with_positional;
  TrainRun without_positional;
  nlohmann::json delta;
};

AblationResult run_ablate_positional(const ExperimentConfig& config, const fs::path& dir);

struct SweepRow {
  double loss_weight = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double predicted_count = 0.0;  // mean over seeds
};

struct SweepResult {
  std::vector<SweepRow> validation;  // sorted by loss_weight
  std::vector<SweepRow> test;
};

std::vector<double> default_sweep_weights();

// One train+eval per (weight, seed); rows average over seeds. At most
// `workers` runs execute concurrently.
SweepResult run_sweep(const ExperimentConfig& config, std::vector<double> weights, const std::vector<std::uint64_t>& seeds,
                      const fs::path& dir, int workers = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// ECPE_NUM_WORKERS, clamped to >= 1.
int worker_limit();

// Trains every split listed in the prepared split file into
// `dir`/split_K and writes an aggregate of the test reports to
// `dir`/summary.json.
std::vector<TrainRun> run_train_all(const ExperimentConfig& config, const fs::path& dir);

// Aggregates report files. Each file holds either one evaluation report or
// a document whose "splits" array holds several.
nlohmann::json aggregate_report_files(const std::vector<fs::path>& paths, int expected_splits);

// Trainable-parameter accounting for a saved checkpoint.
nlohmann::json parameter_report(const fs::path& checkpoint_path);

// Writes corpus.jsonl and embeddings.txt (vectors for every synthetic token)
// into `dir`.
struct FixturePaths {
  fs::path corpus;
  fs::path embeddings;
};
FixturePaths write_synthetic_fixture(const fs::path& dir, const corpus::SyntheticOptions& options, std::uint64_t seed,
                                     int dim = corpus::kEmbeddingDim);

nlohmann::json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace ecpe::cli
