// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package's __init__.py.

#include "ecpe/experiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <tuple>

namespace py = pybind11;
using namespace ecpe;
using nlohmann::json;

namespace {

cli::ExperimentConfig make_config(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
  cli::ExperimentConfig c = config_path.empty() ? cli::ExperimentConfig{} : cli::load_config(config_path);
  for (const auto& [k, v] : overrides) cli::set_key(c, k, v);
  return c;
}

json run_json(const cli::TrainRun& run) {
  return json{{"dir", run.dir.string()},
              {"best_epoch", run.state.best_epoch},
              {"epochs_completed", run.state.epochs_completed},
              {"validation", metrics::to_json(run.validation)},
              {"test", metrics::to_json(run.test)},
              {"params", training::to_json(run.params)}};
}

json sweep_rows(const std::vector<cli::SweepRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"loss_weight", r.loss_weight},
                 {"precision", r.precision},
                 {"recall", r.recall},
                 {"f1", r.f1},
                 {"predicted_count", r.predicted_count}});
  }
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Emotion-cause pair extraction core";

  // Translators run most-recent first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("relative_bucket", &pairing::relative_bucket, py::arg("i"), py::arg("j"), py::arg("k") = pairing::kClipDistance);

  m.def(
      "pair_prf",
      [](const std::vector<std::tuple<std::string, int, int>>& predicted,
         const std::vector<std::tuple<std::string, int, int>>& gold) {
        std::set<metrics::PairKey> p, g;
        for (const auto& [d, i, j] : predicted) p.insert({d, i, j});
        for (const auto& [d, i, j] : gold) g.insert({d, i, j});
        const auto r = metrics::pair_prf(p, g);
        return json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
                    {"proposed", r.proposed},   {"correct", r.correct}, {"annotated", r.annotated}}
            .dump();
      },
      py::arg("predicted"), py::arg("gold"));

  m.def(
      "clause_prf",
      [](const std::vector<int>& predicted, const std::vector<int>& gold) {
        const auto r = metrics::clause_prf(predicted, gold);
        return json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}}.dump();
      },
      py::arg("predicted"), py::arg("gold"));

  m.def(
      "parse_corpus",
      [](const std::filesystem::path& path) {
        json out = json::array();
        for (const auto& d : corpus::parse_corpus(path)) out.push_back(json::parse(corpus::serialize_document(d)));
        return out.dump();
      },
      py::arg("path"));

  m.def(
      "make_splits",
      [](const std::filesystem::path& corpus_path, std::uint64_t seed, int split_count) {
        return corpus::split_set_to_json(corpus::make_splits(corpus::parse_corpus(corpus_path), seed, split_count));
      },
      py::arg("corpus"), py::arg("seed"), py::arg("split_count") = corpus::kDefaultSplitCount);

  m.def(
      "synthetic_fixture",
      [](const std::filesystem::path& dir, int documents, std::uint64_t seed, int dim) {
        corpus::SyntheticOptions opt;
        opt.documents = documents;
        const auto p = cli::write_synthetic_fixture(dir, opt, seed, dim);
        return std::make_pair(p.corpus.string(), p.embeddings.string());
      },
      py::arg("dir"), py::arg("documents") = 50, py::arg("seed") = 1, py::arg("dim") = corpus::kEmbeddingDim);

  m.def(
      "prepare",
      [](const std::filesystem::path& corpus_path, const std::filesystem::path& embeddings, std::uint64_t seed,
         const std::filesystem::path& out, int min_count, int dim) {
        cli::prepare(corpus_path, embeddings, seed, out, min_count, dim);
        return cli::read_json(out / "manifest.json").dump();
      },
      py::arg("corpus"), py::arg("embeddings"), py::arg("seed"), py::arg("out"), py::arg("min_count") = 1,
      py::arg("dim") = corpus::kEmbeddingDim, py::call_guard<py::gil_scoped_release>());

  m.def(
      "resolve_config",
      [](const std::string& config_path, const std::map<std::string, std::string>& overrides) {
        return cli::to_key_values(make_config(config_path, overrides));
      },
      py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "train",
      [](const std::string& config_path, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        const auto c = make_config(config_path, overrides);
        return run_json(cli::run_train(c, c.split, out)).dump();
      },
      py::arg("config"), py::arg("overrides"), py::arg("out"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::string& mode, const std::string& set,
         const std::string& data_dir, const std::string& predictions) {
        cli::EvalOptions opt;
        opt.mode = cli::parse_eval_mode(mode);
        opt.set = set;
        opt.data_dir = data_dir;
        opt.predictions = predictions;
        return metrics::to_json(cli::run_eval(checkpoint, opt)).dump();
      },
      py::arg("checkpoint"), py::arg("mode") = "ecpe", py::arg("set") = "test", py::arg("data_dir") = "",
      py::arg("predictions") = "", py::call_guard<py::gil_scoped_release>());

  m.def(
      "predict",
      [](const std::filesystem::path& checkpoint_path, const std::vector<std::string>& clauses) {
        auto ckpt = checkpoint::load(checkpoint_path);
        if (ckpt.model.plan().signal_is_gold) {
          throw ConfigError("predict needs a variant that uses no annotations (pext-e or pext-c)");
        }
        json line{{"doc_id", "input"}, {"clauses", clauses}, {"pairs", json::array()}};
        const auto doc = corpus::parse_document(line.dump(), 1);
        const auto& meta = ckpt.metadata;
        model::Caps caps{meta.value("max_clauses", 30), meta.value("max_tokens", 40)};
        const std::vector docs{model::encode_document(doc, ckpt.vocabulary, caps)};
        const auto out = ckpt.model.predict(model::make_batch(docs));
        return cli::prediction_record(out.front(), meta.value("threshold", pairing::kDecisionThreshold)).dump();
      },
      py::arg("checkpoint"), py::arg("clauses"));

  m.def(
      "ablate_positional",
      [](const std::string& config_path, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        return cli::run_ablate_positional(make_config(config_path, overrides), out).delta.dump();
      },
      py::arg("config"), py::arg("overrides"), py::arg("out"), py::call_guard<py::gil_scoped_release>());

  m.def(
      "sweep_loss_weight",
      [](const std::string& config_path, const std::map<std::string, std::string>& overrides,
         const std::vector<double>& weights, const std::vector<std::uint64_t>& seeds,
         const std::filesystem::path& out, int workers) {
        const auto c = make_config(config_path, overrides);
        const auto r = cli::run_sweep(c, weights, seeds.empty() ? std::vector{c.train.seed} : seeds, out,
                                      workers > 0 ? workers : cli::worker_limit());
        return json{{"validation", sweep_rows(r.validation)}, {"test", sweep_rows(r.test)}}.dump();
      },
      py::arg("config"), py::arg("overrides"), py::arg("weights"), py::arg("seeds"), py::arg("out"),
      py::arg("workers") = 0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "parameter_report",
      [](const std::filesystem::path& checkpoint) { return cli::parameter_report(checkpoint).dump(); },
      py::arg("checkpoint"));

  m.attr("REFERENCE_PARAMETER_COUNT") = training::kReferenceParameterCount;
}
