#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "archbert/cli.hpp"
#include "archbert/config.hpp"
#include "archbert/datagen.hpp"
#include "archbert/dataset_io.hpp"
#include "archbert/error.hpp"
#include "archbert/eval.hpp"
#include "archbert/graph_ir.hpp"
#include "archbert/model.hpp"
#include "archbert/search_index.hpp"
#include "archbert/training.hpp"

namespace py = pybind11;
using namespace archbert;

namespace {

ArchGraph graph_from_text(const std::string& text) { return parse_graph(text); }

std::string graph_text(const ArchGraph& g) { return graph_to_json(g, NodeVocab::catalog()).dump(); }

std::vector<std::string> op_names(const ArchGraph& g) {
  std::vector<std::string> out;
  for (auto id : g.nodes) out.push_back(NodeVocab::catalog().name(id));
  return out;
}

template <typename T>
std::vector<std::string> dump_all(const std::vector<T>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_json(r).dump());
  return out;
}

GenConfig gen_config(const std::string& config_text, std::uint64_t seed) {
  auto rc = RunConfig::parse(config_text);
  rc.set_seed(seed);
  return rc.gen;
}

std::vector<std::string> generate(const std::string& task, std::uint64_t seed, std::size_t count,
                                  const std::string& config_text) {
  const auto cfg = gen_config(config_text, seed);
  const std::size_t n = count == 0 ? cfg.num_archs : count;
  if (task == "autonet") return dump_all(gen_autonet(cfg, n));
  if (task == "aqa") return dump_all(gen_autonet_qa(cfg, n));
  if (task == "tvhf-mine") return dump_all(gen_mined(cfg, n));
  if (task == "acd") return dump_all(gen_acd_dataset(cfg));
  if (task == "bacd") return dump_all(gen_bacd_dataset(cfg));
  if (task == "ac") return dump_all(captions_from_bimodal(gen_autonet(cfg, n)));
  throw DataError("unknown generation task '" + task + "'");
}

// Settings values may be any Python scalar; bools spell as true/false.
Model make_model(const std::vector<std::string>& words, const py::dict& settings) {
  ModelConfig cfg;
  for (const auto& [k, v] : settings) {
    const std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false") : py::str(v).cast<std::string>();
    cfg.set(py::str(k).cast<std::string>(), value);
  }
  cfg.validate();
  return Model(cfg, TextVocab(words));
}

std::vector<std::string> train(Model& model, const std::string& task, const std::vector<std::string>& records,
                               std::size_t epochs, double lr, std::size_t batch_size, std::uint64_t seed) {
  TrainConfig tc;
  tc.task = parse_train_task(task);
  tc.epochs = epochs;
  tc.lr = lr;
  tc.batch_size = batch_size;
  tc.seed = seed;
  tc.alpha = model.config().alpha;
  tc.mask_ratio = model.config().mask_ratio;
  tc.validate();
  std::vector<nlohmann::json> docs;
  for (const auto& r : records) docs.push_back(nlohmann::json::parse(r));
  auto load = [&](auto from_json) {
    std::vector<decltype(from_json(docs.front()))> out;
    for (const auto& d : docs) out.push_back(from_json(d));
    return out;
  };
  if (docs.empty()) throw DataError("train: no records");
  TrainResult res;
  switch (tc.task) {
    case TrainTask::Pretrain: res = pretrain(model, load(bimodal_from_json), tc); break;
    case TrainTask::AQA: res = finetune_aqa(model, load(aqa_from_json), tc); break;
    case TrainTask::AC: res = finetune_ac(model, load(ac_from_json), tc); break;
    case TrainTask::ACD: res = train_acd(model, load(acd_from_json), tc); break;
  }
  std::vector<std::string> log;
  for (const auto& e : res.log) log.push_back(epoch_log_json(e, tc.task));
  return log;
}

py::dict cls_dict(const ClsMetrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["tn"] = m.tn;
  d["fn"] = m.fn;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Architecture graph and text representation toolkit";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<GraphValidationError>(m, "GraphValidationError", PyExc_ValueError);

  py::class_<ArchGraph>(m, "Graph")
      .def_static("from_json", &graph_from_text, py::arg("text"), "Parse and validate a graph JSON object.")
      .def("to_json", &graph_text)
      .def_property_readonly("ops", &op_names)
      .def_readonly("edges", &ArchGraph::edges)
      .def_readonly("shapes", &ArchGraph::shapes)
      .def_property_readonly("name", [](const ArchGraph& g) { return g.name; })
      .def("__len__", &ArchGraph::size)
      .def("__eq__", [](const ArchGraph& a, const ArchGraph& b) { return a == b; })
      .def("violations", [](const ArchGraph& g) {
        std::vector<std::string> codes;
        for (const auto& v : validate_graph(g, &NodeVocab::catalog()).violations) codes.push_back(v.code);
        return codes;
      });

  m.def("catalog_ops", [] {
    const auto& names = NodeVocab::catalog().names();
    return std::vector<std::string>(names.begin() + NodeVocab::kReserved, names.end());
  });
  m.def("default_op_vocab", &GenConfig::default_op_vocab);
  m.def("normalize_words", [](const std::string& s) { return normalize_words(s); });
  m.def("token_overlap_similarity", &token_overlap_similarity);
  m.def("jaccard_similarity", [](const ArchGraph& a, const ArchGraph& b) { return jaccard_similarity(a, b); });
  m.def("mine_negatives", [](const std::map<std::string, std::vector<std::string>>& pos, double beta) {
    return mine_negatives(pos, token_overlap_similarity, beta);
  }, py::arg("positives"), py::arg("beta") = 0.5);

  m.def("accuracy_f1", [](const std::vector<int>& p, const std::vector<int>& l) { return cls_dict(accuracy_f1(p, l)); },
        py::arg("preds"), py::arg("labels"));
  m.def("rouge_scores", [](const std::string& c, const std::string& r) {
    const auto s = rouge_scores(c, r);
    py::dict d;
    d["r1"] = s.r1;
    d["r2"] = s.r2;
    d["rlsum"] = s.rlsum;
    return d;
  }, py::arg("candidate"), py::arg("reference"));

  m.def("_generate", &generate, py::arg("task"), py::arg("seed") = 0, py::arg("count") = 0,
        py::arg("config_text") = "");

  py::class_<Model>(m, "Model")
      .def(py::init(&make_model), py::arg("words"), py::arg("settings") = py::dict())
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("config", [](const Model& mo) {
        std::map<std::string, std::string> out;
        for (const auto& k : ModelConfig::keys()) out[k] = mo.config().get(k);
        return out;
      })
      .def("param_count", [](const Model& mo) { return mo.params().scalar_count(); })
      .def("fingerprint", [](const Model& mo) { return to_hex(model_fingerprint(mo)); })
      .def("text_embedding", &Model::text_embedding, py::arg("text"))
      .def("graph_embedding", &Model::graph_embedding, py::arg("graph"))
      .def("score", &Model::score, py::arg("text"), py::arg("graph"))
      .def("answer_probabilities", &Model::answer_probabilities, py::arg("graph"), py::arg("question"))
      .def("caption", &Model::caption, py::arg("graph"), py::arg("beam") = 10, py::arg("max_len") = 31);

  m.def("_train", &train, py::arg("model"), py::arg("task"), py::arg("records"), py::arg("epochs") = 1,
        py::arg("lr") = 2e-5, py::arg("batch_size") = 8, py::arg("seed") = 0);

  py::class_<EmbeddingIndex>(m, "Index")
      .def_static("load", &EmbeddingIndex::load, py::arg("path"))
      .def("save", &EmbeddingIndex::save, py::arg("path"))
      .def("__len__", &EmbeddingIndex::size)
      .def_property_readonly("dim", &EmbeddingIndex::dim)
      .def_property_readonly("ids", [](const EmbeddingIndex& ix) {
        std::vector<std::string> out;
        for (const auto& e : ix.entries()) out.push_back(e.id);
        return out;
      })
      .def("search", [](const EmbeddingIndex& ix, const std::string& q, Model& mo, std::size_t k) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& h : search(ix, q, mo, k)) out.emplace_back(h.id, h.score);
        return out;
      }, py::arg("query"), py::arg("model"), py::arg("k") = 5);
  m.def("build_index", &build_index, py::arg("model"), py::arg("graphs"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run(args, out, err);
    }
    return py::make_tuple(code, py::bytes(out.str()), err.str());
  }, py::arg("args"), "Run the command line in-process; returns (exit code, stdout bytes, stderr text).");
}
