#include <doctest.h>

#include "support/fixtures.hpp"

#include "ecpe/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ecpe;
using namespace ecpe::cli;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

constexpr int kDim = 8;

// Small layers so each run takes well under a second.
std::string small_config(const fs::path& data, const fs::path& out) {
  return "data_dir = " + data.string() + "\nout_dir = " + out.string() +
         "\nembed_dim = 8\nword_hidden = 6\nattention_dim = 6\nclause_hidden = 6\npos_dim = 4\n"
         "pair_hidden = 8\nbatch_size = 4\nlearning_rate = 0.01\n";
}

struct Workspace {
  fs::path dir;
  FixturePaths fixture;
  fs::path data;

  explicit Workspace(const std::string& name, int documents = 12) {
    dir = test::scratch_dir(name);
    corpus::SyntheticOptions opt;
    opt.documents = documents;
    fixture = write_synthetic_fixture(dir / "fixture", opt, 5, kDim);
    data = dir / "prepared";
    prepare(fixture.corpus, fixture.embeddings, 21, data, 1, kDim);
  }

  ExperimentConfig config(const std::string& extra = "") const {
    write_text(dir / "cfg.txt", small_config(data, dir / "runs") + extra);
    return load_config(dir / "cfg.txt");
  }
};

}  // namespace

TEST_CASE("config files: comments, unknown keys and bad values") {
  const auto dir = test::scratch_dir("cfg");
  write_text(dir / "a.txt", "# comment\nepochs = 3   # trailing\n\nloss_weight=0.25\nvariant = E2E-PExt_C\nuse_positional = false\n");
  const auto c = load_config(dir / "a.txt");
  CHECK(c.train.epochs == 3);
  CHECK(c.train.weights.loss_weight == 0.25);
  CHECK(c.model.variant.variant == encoder::Variant::PExtC);
  CHECK_FALSE(c.model.use_positional);
  CHECK(c.train.learning_rate == 0.005);

  write_text(dir / "b.txt", "epoch = 3\n");
  CHECK_THROWS_AS(load_config(dir / "b.txt"), ConfigError);
  write_text(dir / "c.txt", "epochs = three\n");
  CHECK_THROWS_AS(load_config(dir / "c.txt"), ConfigError);
  write_text(dir / "d.txt", "epochs 3\n");
  CHECK_THROWS_AS(load_config(dir / "d.txt"), ConfigError);
}

TEST_CASE("config serialisation round trips every key") {
  ExperimentConfig c;
  c.train.weights.lambda_p = 1.75;
  c.train.seed = 99;
  c.model.variant = {encoder::Variant::EExt, true, true};
  c.caps.max_tokens = 12;
  const auto text = to_key_values(c);
  for (const auto& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
  const auto dir = test::scratch_dir("cfg_rt");
  write_text(dir / "c.txt", text);
  CHECK(to_key_values(load_config(dir / "c.txt")) == text);
}

TEST_CASE("prepare: floor split sizes and byte-identical reruns") {
  Workspace ws("prepare");
  const auto splits = corpus::read_split_set(ws.data / "splits.json");
  REQUIRE(splits.splits.size() == 10);
  for (const auto& s : splits.splits) {
    CHECK(s.train.size() == 9);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 2);
  }
  const auto first = slurp(ws.data / "splits.json");
  const auto manifest = slurp(ws.data / "manifest.json");
  const auto vocab = slurp(ws.data / "vocab" / "split_3.txt");
  prepare(ws.fixture.corpus, ws.fixture.embeddings, 21, ws.data, 1, kDim);
  CHECK(slurp(ws.data / "splits.json") == first);
  CHECK(slurp(ws.data / "manifest.json") == manifest);
  CHECK(slurp(ws.data / "vocab" / "split_3.txt") == vocab);
  CHECK(manifest.find("created") == std::string::npos);

  CHECK_THROWS_AS(prepare(ws.fixture.corpus, ws.dir / "nope.txt", 21, ws.dir / "p2", 1, kDim), Error);
  CHECK_THROWS_AS(prepare(ws.fixture.corpus, ws.fixture.embeddings, 21, ws.dir / "p3", 1, kDim + 1), Error);
}

TEST_CASE("train writes one log record per epoch plus checkpoint and reports") {
  Workspace ws("train");
  const auto cfg = ws.config();
  CHECK(cfg.train.epochs == 15);
  const auto run = run_train(cfg, 0, ws.dir / "run");
  CHECK(lines_of(run.dir / "train_log.jsonl").size() == 15);
  for (const auto& f : {"checkpoint.bin", "report.json", "params.json", "config.txt", "run.meta.json", "train_state.json"}) {
    CHECK(fs::exists(run.dir / f));
  }
  const auto rec = json::parse(lines_of(run.dir / "train_log.jsonl").front());
  for (const auto& key : {"epoch", "L_e", "L_c", "L_pos", "L_neg", "L_total", "val_pair_f1"}) CHECK(rec.contains(key));
  const auto report = read_json(run.dir / "report.json");
  CHECK(report.at("test").at("split") == 0);
  CHECK(report.at("validation").at("set") == "val");
}

TEST_CASE("eext runs report perfect cause extraction every epoch") {
  Workspace ws("eext");
  auto cfg = ws.config("variant = eext\ngold_labels_available = true\nepochs = 4\n");
  const auto run = run_train(cfg, 1, ws.dir / "run");
  for (const auto& line : lines_of(run.dir / "train_log.jsonl")) {
    const auto j = json::parse(line);
    CHECK(j.at("val_cause_f1") == 1.0);
    CHECK(j.at("val_cause_p") == 1.0);
    CHECK(j.at("val_cause_r") == 1.0);
  }
  CHECK(run.test.cause.f1 == 1.0);
  CHECK(run.test.cause.precision == 1.0);
  CHECK(run.test.cause.recall == 1.0);

  cfg.model.variant.gold_labels_available = false;
  CHECK_THROWS_AS(run_train(cfg, 1, ws.dir / "run2"), ConfigError);
}

TEST_CASE("without the pair term the pair head does not beat the weighted run") {
  Workspace ws("lambda_p", 40);
  const auto weighted = ws.config("epochs = 25\nsplit = 0\n");
  auto silent = weighted;
  silent.train.weights.lambda_p = 0.0;
  run_train(weighted, 0, ws.dir / "weighted");
  run_train(silent, 0, ws.dir / "silent");
  EvalOptions opt;
  opt.set = "train";
  const auto a = run_eval(ws.dir / "weighted" / "checkpoint.bin", opt);
  const auto b = run_eval(ws.dir / "silent" / "checkpoint.bin", opt);
  CHECK(b.pair.f1 < a.pair.f1);
}

TEST_CASE("eval: mode and variant must agree") {
  Workspace ws("eval_modes");
  const auto pe = run_train(ws.config("epochs = 2\n"), 0, ws.dir / "pe");
  const auto ce = run_train(ws.config("epochs = 2\nvariant = cext\ngold_labels_available = true\n"), 0, ws.dir / "ce");
  EvalOptions ecpe_mode, ece_mode;
  ece_mode.mode = EvalMode::Ece;
  CHECK_NOTHROW(run_eval(pe.dir / "checkpoint.bin", ecpe_mode));
  CHECK_THROWS_AS(run_eval(pe.dir / "checkpoint.bin", ece_mode), ConfigError);
  CHECK_THROWS_AS(run_eval(ce.dir / "checkpoint.bin", ecpe_mode), ConfigError);
  const auto r = run_eval(ce.dir / "checkpoint.bin", ece_mode);
  CHECK(r.emotion.f1 == 1.0);
  CHECK(metrics::to_json(r) == metrics::to_json(ce.test));
}

TEST_CASE("eval in ecpe mode ignores gold labels (poisoned corpus)") {
  Workspace ws("poison");
  run_train(ws.config("epochs = 3\n"), 0, ws.dir / "run");

  auto docs = corpus::parse_corpus(ws.fixture.corpus);
  for (auto& d : docs) {
    std::set<ClausePair> flipped;
    for (int i = 0; i < d.size(); ++i)
      for (int j = 0; j < d.size(); ++j)
        if (!d.gold_pairs.count({i, j})) flipped.emplace(i, j);
    d.gold_pairs = flipped;
  }
  corpus::write_corpus(docs, ws.dir / "poisoned.jsonl");
  prepare(ws.dir / "poisoned.jsonl", ws.fixture.embeddings, 21, ws.dir / "poisoned", 1, kDim);

  EvalOptions clean, poisoned;
  for (const auto& set : {"val", "test"}) {
    clean.set = poisoned.set = set;
    clean.predictions = ws.dir / "clean.jsonl";
    poisoned.predictions = ws.dir / "poisoned_pred.jsonl";
    poisoned.data_dir = (ws.dir / "poisoned").string();
    run_eval(ws.dir / "run" / "checkpoint.bin", clean);
    run_eval(ws.dir / "run" / "checkpoint.bin", poisoned);
    CHECK(slurp(ws.dir / "clean.jsonl") == slurp(ws.dir / "poisoned_pred.jsonl"));
  }
  const auto record = json::parse(lines_of(ws.dir / "clean.jsonl").front());
  for (const auto& key : {"doc_id", "pairs", "emotion", "cause"}) CHECK(record.contains(key));
}

TEST_CASE("end-to-end runs are byte-identical apart from the timestamp sidecar") {
  Workspace ws("determinism");
  const auto cfg = ws.config("epochs = 3\n");
  run_train(cfg, 2, ws.dir / "a");
  run_train(cfg, 2, ws.dir / "b");
  for (const auto& f : {"train_log.jsonl", "report.json", "checkpoint.bin", "params.json", "train_state.json"}) {
    CHECK(slurp(ws.dir / "a" / f) == slurp(ws.dir / "b" / f));
  }
}

TEST_CASE("positional ablation shares seed and split and records the delta") {
  Workspace ws("ablate");
  const auto cfg = ws.config("epochs = 3\nsplit = 1\n");
  const auto r = run_ablate_positional(cfg, ws.dir / "ablate");
  CHECK(r.with_positional.test.split == r.without_positional.test.split);
  CHECK(r.delta.at("split") == 1);
  CHECK(r.delta.at("seed") == cfg.train.seed);
  CHECK(r.delta.at("param_difference") == 21 * 4 + 8 * 4);
  CHECK(r.delta.at("test_f1_delta").get<double>() ==
        r.with_positional.test.pair.f1 - r.without_positional.test.pair.f1);
  CHECK(fs::exists(ws.dir / "ablate" / "delta.json"));
  CHECK(fs::exists(ws.dir / "ablate" / "with_pe" / "report.json"));
  CHECK(fs::exists(ws.dir / "ablate" / "without_pe" / "report.json"));
}

TEST_CASE("sweep: sorted rows, csv shape and worker-count independence") {
  Workspace ws("sweep");
  const auto cfg = ws.config("epochs = 2\n");
  const auto serial = run_sweep(cfg, {1.0, 0.1, 0.5}, {1, 2}, ws.dir / "serial", 1);
  const auto parallel = run_sweep(cfg, {1.0, 0.1, 0.5}, {1, 2}, ws.dir / "parallel", 3);
  REQUIRE(serial.validation.size() == 3);
  CHECK(serial.validation[0].loss_weight == 0.1);
  CHECK(serial.validation[2].loss_weight == 1.0);
  CHECK(sweep_csv(serial.validation) == sweep_csv(parallel.validation));
  CHECK(sweep_csv(serial.test) == sweep_csv(parallel.test));
  const auto csv = lines_of(ws.dir / "serial" / "sweep_val.csv");
  REQUIRE(csv.size() == 4);
  CHECK(csv[0] == "weight,P,R,F1,predicted_count");
  CHECK(fs::exists(ws.dir / "serial" / "plot.json"));
  CHECK(fs::exists(ws.dir / "serial" / "sweep_test.csv"));

  CHECK_THROWS_AS(run_sweep(cfg, {0.5}, {1}, ws.dir / "x", 1), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, {0.0, 0.5}, {1}, ws.dir / "x", 1), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, {0.5, 1.5}, {1}, ws.dir / "x", 1), ConfigError);
}

TEST_CASE("report aggregation over saved reports") {
  Workspace ws("report");
  const auto cfg = ws.config("epochs = 1\n");
  std::vector<fs::path> files;
  for (int k = 0; k < 3; ++k) {
    run_train(cfg, k, ws.dir / ("split_" + std::to_string(k)));
    files.push_back(ws.dir / ("split_" + std::to_string(k)) / "report.json");
  }
  const auto doc = aggregate_report_files(files, 3);
  CHECK(doc.at("splits").size() == 3);
  CHECK_THROWS_AS(aggregate_report_files(files, 4), ValidationError);

  const auto params = parameter_report(ws.dir / "split_0" / "checkpoint.bin");
  CHECK(params.at("reference_e2e_pext_e") == 790257);
  CHECK(params.at("trainable_with_embeddings").get<std::size_t>() >
        params.at("trainable_without_embeddings").get<std::size_t>());
  CHECK(parameter_report(ws.dir / "split_0" / "checkpoint.bin") == params);
}

#ifdef ECPE_CLI_PATH

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + ECPE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli exit codes") {
  Workspace ws("cli");
  const auto log = ws.dir / "out.txt";
  const std::string cfg = (ws.dir / "cli.txt").string();
  write_text(cfg, small_config(ws.data, ws.dir / "runs") + "epochs = 2\n");

  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("frobnicate", log) == 2);
  CHECK(run_cli("train --no-such-flag", log) == 2);
  CHECK(run_cli("sweep-loss-weight --config " + cfg + " --weights ''", log) == 2);
  CHECK(run_cli("--help", log) == 0);

  CHECK(run_cli("prepare --corpus " + ws.fixture.corpus.string() + " --embeddings missing.txt --seed 1 --dim 8 --out " +
                    (ws.dir / "p").string(),
                log) == 1);
  CHECK(slurp(log).find("missing.txt") != std::string::npos);

  CHECK(run_cli("prepare --corpus " + ws.fixture.corpus.string() + " --embeddings " + ws.fixture.embeddings.string() +
                    " --seed 21 --dim 8 --out " + (ws.dir / "p").string(),
                log) == 0);
  CHECK(slurp(ws.dir / "p" / "splits.json") == slurp(ws.data / "splits.json"));

  CHECK(run_cli("train --config " + cfg + " --split 1 --variant pext-e", log) == 0);
  const auto ckpt = ws.dir / "runs" / "pext-e" / "split_1" / "checkpoint.bin";
  CHECK(fs::exists(ckpt));
  CHECK(run_cli("train --config " + cfg + " --split 1 --variant eext", log) == 1);
  CHECK(run_cli("train --config " + cfg + " --split 1 --variant eext --gold-labels", log) == 0);
  CHECK(run_cli("train --config " + cfg + " --split 99", log) == 1);

  CHECK(run_cli("eval --checkpoint " + ckpt.string() + " --mode ecpe", log) == 0);
  CHECK(fs::exists(ckpt.parent_path() / "eval_ecpe_test.json"));
  CHECK(fs::exists(ckpt.parent_path() / "predictions_ecpe_test.jsonl"));
  CHECK(run_cli("eval --checkpoint " + ckpt.string() + " --mode ece", log) == 1);
  CHECK(run_cli("eval --checkpoint " + ckpt.string() + " --mode bogus", log) == 2);

  CHECK(run_cli("report --checkpoint " + ckpt.string(), log) == 0);
  CHECK(slurp(log).find("790257") != std::string::npos);
  CHECK(run_cli("report --reports " + (ckpt.parent_path() / "report.json").string() + " --expect-splits 2", log) == 1);
}

#endif
