// ecpe: prepare data, train, evaluate and run the two ablations.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include "ecpe/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using ecpe::cli::ExperimentConfig;
using nlohmann::json;

namespace {

constexpr int kUsageError = 2;
constexpr int kFailure = 1;

// Flags that override keys of the config file.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> flags;  // flag name, config key
  std::map<std::string, std::string> values;
  std::vector<std::string> assignments;  // --set key=value

  void attach(CLI::App* cmd) {
    static const std::vector<std::pair<std::string, std::string>> known = {
        {"--epochs", "epochs"},          {"--seed", "seed"},
        {"--learning-rate", "learning_rate"}, {"--batch-size", "batch_size"},
        {"--dropout", "dropout"},        {"--l2", "l2"},
        {"--lambda-c", "lambda_c"},      {"--lambda-e", "lambda_e"},
        {"--lambda-p", "lambda_p"},      {"--loss-weight", "loss_weight"},
        {"--threshold", "threshold"},    {"--data-dir", "data_dir"},
        {"--out", "out_dir"},            {"--split", "split"},
        {"--variant", "variant"}};
    flags = known;
    for (const auto& [flag, key] : flags) {
      cmd->add_option_function<std::string>(
          flag, [this, key = key](const std::string& v) { values[key] = v; }, "override config key " + key);
    }
    cmd->add_option("--set", assignments, "override any config key: --set key=value")->allow_extra_args(false);
    cmd->add_flag_function(
        "--gold-labels", [this](std::int64_t) { values["gold_labels_available"] = "true"; },
        "declare gold labels available at test time (needed by cext and eext)");
  }

  ExperimentConfig load(const fs::path& path) const {
    ExperimentConfig c = path.empty() ? ExperimentConfig{} : ecpe::cli::load_config(path);
    for (const auto& [k, v] : values) ecpe::cli::set_key(c, k, v);
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ecpe::ConfigError("--set expects key=value, got '" + a + "'");
      ecpe::cli::set_key(c, a.substr(0, eq), a.substr(eq + 1));
    }
    return c;
  }
};

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--weights", "not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--seeds", "not an integer: '" + item + "'");
    }
  }
  return out;
}

void print_report(const ecpe::metrics::EvaluationReport& r) {
  std::cout << r.variant << " split " << r.split << " " << r.set << ": pair P=" << r.pair.precision
            << " R=" << r.pair.recall << " F1=" << r.pair.f1 << " | emotion F1=" << r.emotion.f1
            << " | cause F1=" << r.cause.f1 << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-cause pair extraction: data preparation, training, evaluation and ablations"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "validate a corpus and write splits, vocabularies and a manifest");
  std::string corpus_path, embeddings_path, prepare_out = "prepared";
  std::uint64_t prepare_seed = 1;
  int min_count = 1, prepare_dim = ecpe::corpus::kEmbeddingDim;
  prepare->add_option("--corpus", corpus_path, "JSON-lines corpus")->required();
  prepare->add_option("--embeddings", embeddings_path, "pretrained word vectors, one 'token v1 .. vd' per line")
      ->required();
  prepare->add_option("--seed", prepare_seed, "master split seed")->required();
  prepare->add_option("--out", prepare_out, "output directory")->capture_default_str();
  prepare->add_option("--min-count", min_count, "vocabulary frequency cutoff")->capture_default_str();
  prepare->add_option("--dim", prepare_dim, "embedding dimension")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train one split (or all of them) and write a checkpoint and epoch log");
  std::string train_config;
  bool all_splits = false;
  Overrides train_over;
  train->add_option("--config", train_config, "key = value config file")->check(CLI::ExistingFile);
  train->add_flag("--all-splits", all_splits, "train every prepared split");
  train_over.attach(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint, eval_mode = "ecpe", eval_set = "test", eval_out, eval_predictions, eval_data;
  int eval_split = -1;
  bool eval_all = false;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file, or a run directory with --all-splits")
      ->required();
  eval->add_option("--mode", eval_mode, "ecpe or ece")->check(CLI::IsMember({"ecpe", "ece"}))->capture_default_str();
  eval->add_option("--set", eval_set, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  eval->add_option("--split", eval_split, "split index (default: the checkpoint's)");
  eval->add_option("--data-dir", eval_data, "prepared data directory (default: the checkpoint's)");
  eval->add_option("--out", eval_out, "report JSON path");
  eval->add_option("--predictions", eval_predictions, "prediction dump (JSON lines)");
  eval->add_flag("--all-splits", eval_all, "evaluate split_*/checkpoint.bin under --checkpoint and aggregate");

  // ablate-positional
  auto* ablate = app.add_subcommand("ablate-positional", "train with and without positional embeddings");
  std::string ablate_config;
  Overrides ablate_over;
  ablate->add_option("--config", ablate_config, "key = value config file")->check(CLI::ExistingFile);
  ablate_over.attach(ablate);

  // sweep-loss-weight
  auto* sweep = app.add_subcommand("sweep-loss-weight", "train and evaluate once per negative-pair loss weight");
  std::string sweep_config, weights_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", seeds_text;
  Overrides sweep_over;
  sweep->add_option("--config", sweep_config, "key = value config file")->check(CLI::ExistingFile);
  sweep->add_option("--weights", weights_text, "comma-separated loss weights in (0, 1]")->capture_default_str();
  sweep->add_option("--seeds", seeds_text, "comma-separated seeds to average over (default: the config seed)");
  sweep_over.attach(sweep);

  // report
  auto* report = app.add_subcommand("report", "aggregate split reports and/or count checkpoint parameters");
  std::vector<std::string> report_files;
  int expect_splits = ecpe::corpus::kDefaultSplitCount;
  std::string report_checkpoint, report_out;
  report->add_option("--reports", report_files, "report JSON files")->check(CLI::ExistingFile);
  report->add_option("--expect-splits", expect_splits, "number of splits that must be present")
      ->capture_default_str();
  report->add_option("--checkpoint", report_checkpoint, "emit trainable-parameter accounting for this checkpoint")
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "write the JSON here as well as to stdout");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus and matching embeddings");
  std::string synth_out = "fixture";
  ecpe::corpus::SyntheticOptions synth_opt;
  std::uint64_t synth_seed = 1;
  int synth_dim = ecpe::corpus::kEmbeddingDim;
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--documents", synth_opt.documents, "document count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--dim", synth_dim, "embedding dimension")->capture_default_str();

  std::vector<double> weights;
  std::vector<std::uint64_t> seeds;
  try {
    app.parse(argc, argv);
    if (*sweep) {
      weights = parse_weights(weights_text);
      if (weights.empty()) throw CLI::ValidationError("--weights", "empty weight list");
      if (!seeds_text.empty()) {
        seeds = parse_seeds(seeds_text);
        if (seeds.empty()) throw CLI::ValidationError("--seeds", "empty seed list");
      }
    }
    if (*report && report_files.empty() && report_checkpoint.empty()) {
      throw CLI::ValidationError("report", "give --reports and/or --checkpoint");
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*prepare) {
      const auto r = ecpe::cli::prepare(corpus_path, embeddings_path, prepare_seed, prepare_out, min_count, prepare_dim);
      std::cout << "prepared " << r.documents << " documents into " << r.splits.splits.size() << " splits in "
                << prepare_out << "\n";
    } else if (*train) {
      const auto cfg = train_over.load(train_config);
      const fs::path root = fs::path(cfg.out_dir) / ecpe::encoder::to_string(cfg.model.variant.variant);
      if (all_splits) {
        for (const auto& run : ecpe::cli::run_train_all(cfg, root)) print_report(run.test);
        std::cout << "summary: " << (root / "summary.json").string() << "\n";
      } else {
        const auto run = ecpe::cli::run_train(cfg, cfg.split, root / ("split_" + std::to_string(cfg.split)));
        print_report(run.validation);
        print_report(run.test);
        std::cout << "checkpoint: " << (run.dir / "checkpoint.bin").string() << "\n";
      }
    } else if (*eval) {
      ecpe::cli::EvalOptions opt;
      opt.mode = ecpe::cli::parse_eval_mode(eval_mode);
      opt.set = eval_set;
      opt.split = eval_split;
      opt.data_dir = eval_data;
      if (eval_all) {
        std::vector<ecpe::metrics::EvaluationReport> reports;
        std::vector<fs::path> checkpoints;
        for (const auto& entry : fs::directory_iterator(eval_checkpoint)) {
          const auto ckpt = entry.path() / "checkpoint.bin";
          if (entry.is_directory() && entry.path().filename().string().rfind("split_", 0) == 0 && fs::exists(ckpt)) {
            checkpoints.push_back(ckpt);
          }
        }
        if (checkpoints.empty()) throw ecpe::Error("no split_*/checkpoint.bin under " + eval_checkpoint);
        std::sort(checkpoints.begin(), checkpoints.end());
        for (const auto& ckpt : checkpoints) {
          reports.push_back(ecpe::cli::run_eval(ckpt, opt));
          print_report(reports.back());
        }
        const auto agg = ecpe::metrics::aggregate_splits(reports, static_cast<int>(reports.size()));
        const auto doc = ecpe::metrics::report_document(reports, agg);
        const fs::path out = eval_out.empty() ? fs::path(eval_checkpoint) / ("eval_" + eval_mode + "_" + eval_set + ".json")
                                              : fs::path(eval_out);
        ecpe::cli::write_text(out, doc.dump(2) + "\n");
        std::cout << "report: " << out.string() << "\n";
      } else {
        const fs::path ckpt(eval_checkpoint);
        const fs::path dir = ckpt.parent_path();
        opt.predictions = eval_predictions.empty() ? dir / ("predictions_" + eval_mode + "_" + eval_set + ".jsonl")
                                                   : fs::path(eval_predictions);
        const auto r = ecpe::cli::run_eval(ckpt, opt);
        const fs::path out =
            eval_out.empty() ? dir / ("eval_" + eval_mode + "_" + eval_set + ".json") : fs::path(eval_out);
        ecpe::cli::write_text(out, ecpe::metrics::to_json(r).dump(2) + "\n");
        print_report(r);
        std::cout << "report: " << out.string() << "\n";
      }
    } else if (*ablate) {
      const auto cfg = ablate_over.load(ablate_config);
      const fs::path dir = fs::path(cfg.out_dir) / "ablate_positional";
      const auto r = ecpe::cli::run_ablate_positional(cfg, dir);
      std::cout << r.delta.dump(2) << "\n";
    } else if (*sweep) {
      const auto cfg = sweep_over.load(sweep_config);
      if (seeds.empty()) seeds.push_back(cfg.train.seed);
      const fs::path dir = fs::path(cfg.out_dir) / "sweep_loss_weight";
      const auto r = ecpe::cli::run_sweep(cfg, weights, seeds, dir, ecpe::cli::worker_limit());
      std::cout << "validation\n" << ecpe::cli::sweep_csv(r.validation) << "test\n" << ecpe::cli::sweep_csv(r.test);
      std::cout << "written to " << dir.string() << "\n";
    } else if (*report) {
      json out = json::object();
      if (!report_files.empty()) {
        std::vector<fs::path> paths(report_files.begin(), report_files.end());
        out["reports"] = ecpe::cli::aggregate_report_files(paths, expect_splits);
      }
      if (!report_checkpoint.empty()) out["parameters"] = ecpe::cli::parameter_report(report_checkpoint);
      if (!report_out.empty()) ecpe::cli::write_text(report_out, out.dump(2) + "\n");
      std::cout << out.dump(2) << "\n";
    } else if (*synth) {
      const auto paths = ecpe::cli::write_synthetic_fixture(synth_out, synth_opt, synth_seed, synth_dim);
      std::cout << "wrote " << paths.corpus.string() << " and " << paths.embeddings.string() << "\n";
    }
  } catch (const ecpe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return 0;
}
