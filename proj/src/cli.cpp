#include "archbert/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "archbert/catalog.hpp"
#include "archbert/config.hpp"
#include "archbert/dataset_io.hpp"
#include "archbert/error.hpp"
#include "archbert/eval.hpp"
#include "archbert/numerics/checkpoint.hpp"
#include "archbert/search_index.hpp"
#include "archbert/training.hpp"

namespace archbert {

namespace {

using nlohmann::ordered_json;

struct Ablations {
  bool no_mam = false, no_cross_encoder = false, no_shape = false, no_edge = false, text_only = false,
       arch_only = false;

  void add_to(CLI::App* app) {
    app->add_flag("--no-mam", no_mam, "Drop the masked-architecture term from the pre-training loss");
    app->add_flag("--no-cross-encoder", no_cross_encoder, "Bypass the shared cross encoder");
    app->add_flag("--no-shape", no_shape, "Omit the shape embeddings");
    app->add_flag("--no-edge", no_edge, "Let every node attend to every node");
    app->add_flag("--text-only", text_only, "Read graphs through the text path as op listings");
    app->add_flag("--arch-only", arch_only, "Disable the text encoder");
  }
  // Flags only switch ablations on; a checkpoint's own settings are kept otherwise.
  void apply(ModelConfig& m) const {
    m.no_mam = m.no_mam || no_mam;
    m.no_cross_encoder = m.no_cross_encoder || no_cross_encoder;
    m.no_shape = m.no_shape || no_shape;
    m.no_edge = m.no_edge || no_edge;
    m.text_only = m.text_only || text_only;
    m.arch_only = m.arch_only || arch_only;
  }
};

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string checkpoint;
  std::string dataset;
  std::size_t beam = 10;
  double tau = 0.5;
  double alpha = 0.05;
  std::size_t k = 5;
  Ablations abl;
  std::set<std::string> seen;  // flags present on the command line

  bool given(const std::string& flag) const { return seen.count(flag) > 0; }

  // gen
  std::string task;
  std::string split = "train";
  std::size_t count = 0;
  // train
  std::size_t epochs = 1;
  double lr = 2e-5;
  std::size_t batch_size = 8;
  std::string log;
  // eval / one-offs
  std::string baseline = "none";
  std::size_t max_len = 0;
  std::string index;
  std::string query;
  std::string graph;
  std::string graph2;
  std::string text;
  std::string question;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(const std::string& value, const char* flag, const char* cmd) {
  if (value.empty()) throw UsageError(std::string(cmd) + ": " + flag + " is required");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  write_file_bytes(path, text);
}

template <typename T>
std::string to_jsonl(const std::vector<T>& records) {
  std::ostringstream os;
  write_jsonl(os, records);
  return os.str();
}

RunConfig base_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (o.config.empty() || o.given("--seed")) cfg.set_seed(o.seed);
  if (o.given("--alpha")) {
    cfg.train.alpha = o.alpha;
    cfg.model.alpha = o.alpha;
  }
  o.abl.apply(cfg.model);
  cfg.validate();
  return cfg;
}

Model load_model(const Options& o) {
  auto model = Model::load(o.checkpoint);
  auto cfg = model.config();
  o.abl.apply(cfg);
  cfg.validate();
  model.mutable_config() = cfg;
  return model;
}

ArchGraph load_graph_file(const std::string& path) { return parse_graph(read_file_bytes(path)); }

std::vector<std::pair<std::string, ArchGraph>> distinct_graphs(const std::vector<nlohmann::json>& docs) {
  std::vector<std::pair<std::string, ArchGraph>> out;
  std::map<std::string, bool> seen_graph;
  std::map<std::string, int> seen_id;
  auto visit = [&](const ArchGraph& g) {
    if (seen_graph.count(serialize_graph(g))) return;
    seen_graph[serialize_graph(g)] = true;
    std::string id = g.name.value_or("graph_" + std::to_string(out.size()));
    if (seen_id[id]++) id += "#" + std::to_string(seen_id[id] - 1);
    out.emplace_back(id, g);
  };
  for (const auto& d : docs) {
    switch (detect_record_kind(d)) {
      case RecordKind::BiModal: visit(bimodal_from_json(d).graph); break;
      case RecordKind::AQA: visit(aqa_from_json(d).graph); break;
      case RecordKind::AC: visit(ac_from_json(d).graph); break;
      case RecordKind::ACD: {
        auto p = acd_from_json(d);
        visit(p.g1);
        visit(p.g2);
        break;
      }
      case RecordKind::BACD: {
        auto p = bacd_from_json(d);
        visit(p.g1);
        visit(p.g2);
        break;
      }
    }
  }
  if (out.empty()) throw DataError("dataset holds no graphs");
  return out;
}

std::string dump_line(const ordered_json& j) { return j.dump() + "\n"; }

int cmd_gen(const Options& o, std::ostream& out) {
  auto cfg = base_config(o);
  const bool val = o.split == "val";
  const std::uint64_t offset = val ? 1 : 0;
  const std::size_t archs = o.count ? o.count : (val ? cfg.gen.num_val_archs : cfg.gen.num_archs);
  std::string text;
  if (o.task == "autonet") {
    text = to_jsonl(gen_autonet(cfg.gen, archs, offset));
  } else if (o.task == "aqa") {
    text = to_jsonl(gen_autonet_qa(cfg.gen, archs, offset));
  } else if (o.task == "ac") {
    text = to_jsonl(captions_from_bimodal(gen_autonet(cfg.gen, archs, offset)));
  } else if (o.task == "acd" || o.task == "bacd") {
    if (o.count) cfg.gen.acd_pairs = o.count;
    text = o.task == "acd" ? to_jsonl(gen_acd_dataset(cfg.gen, offset)) : to_jsonl(gen_bacd_dataset(cfg.gen, offset));
  } else {
    text = to_jsonl(gen_mined(cfg.gen, archs, offset));
  }
  emit(text, o.out, out);
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  require(o.dataset, "dataset", "stats");
  emit(dump_line(to_json(dataset_stats(read_jsonl(o.dataset)))), o.out, out);
  return kExitOk;
}

std::vector<std::string> corpus_texts(const std::vector<nlohmann::json>& docs) {
  std::vector<std::string> texts;
  for (const auto& d : docs) {
    for (const char* key : {"text", "question", "caption"}) {
      if (d.contains(key) && d.at(key).is_string()) texts.push_back(d.at(key).get<std::string>());
    }
  }
  return texts;
}

int cmd_train(const Options& o, std::ostream& out) {
  require(o.dataset, "--dataset", "train");
  require(o.out, "--out", "train");
  auto cfg = base_config(o);
  if (o.given("--epochs")) cfg.train.epochs = o.epochs;
  if (o.given("--lr")) cfg.train.lr = o.lr;
  if (o.given("--batch-size")) cfg.train.batch_size = o.batch_size;
  cfg.train.task = parse_train_task(o.task);
  cfg.train.checkpoint = o.out;
  cfg.validate();
  const auto docs = read_jsonl(o.dataset);
  std::optional<Model> model;
  if (!o.checkpoint.empty()) {
    model.emplace(load_model(o));
  } else {
    auto texts = corpus_texts(docs);
    if (texts.empty()) texts.push_back("");
    model.emplace(cfg.model, build_vocab(texts, cfg.model.vocab_max_size));
  }
  std::ofstream log_file;
  std::ostringstream log_buf;
  std::ostream* log = &log_buf;
  if (!o.log.empty()) {
    log_file.open(o.log, std::ios::binary);
    if (!log_file) throw DataError("cannot write " + o.log);
    log = &log_file;
  }
  switch (cfg.train.task) {
    case TrainTask::Pretrain: pretrain(*model, load_bimodal(o.dataset), cfg.train, log); break;
    case TrainTask::AQA: finetune_aqa(*model, load_aqa(o.dataset), cfg.train, log); break;
    case TrainTask::AC: finetune_ac(*model, load_ac(o.dataset), cfg.train, log); break;
    case TrainTask::ACD: train_acd(*model, load_acd(o.dataset), cfg.train, log); break;
  }
  if (o.log.empty()) out << log_buf.str();
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.dataset, "--dataset", "eval");
  if (o.baseline != "none") {
    ordered_json j;
    if (o.baseline == "name" && o.task == "ar") {
      j = metrics_json("ar-name-baseline", run_ar_name_baseline(load_bimodal(o.dataset)));
    } else if (o.baseline == "jaccard" && o.task == "acd") {
      j = metrics_json("acd-jaccard-baseline", run_acd_jaccard(load_acd(o.dataset), o.tau));
    } else {
      err << "the " << o.baseline << " baseline does not apply to task " << o.task << "\n";
      return kExitUsage;
    }
    emit(dump_line(j), o.out, out);
    return kExitOk;
  }
  if (o.checkpoint.empty()) {
    throw UsageError("eval: --checkpoint is required unless --baseline is given");
  }
  auto model = load_model(o);
  const double tau = o.given("--tau") ? o.tau : model.config().tau;
  ordered_json j;
  if (o.task == "ar") {
    j = metrics_json("ar", run_ar(model, load_bimodal(o.dataset), tau));
  } else if (o.task == "acd") {
    j = metrics_json("acd", run_acd(model, load_acd(o.dataset), tau));
  } else if (o.task == "bacd") {
    j = metrics_json("bacd", run_bacd(model, load_bacd(o.dataset), tau));
  } else if (o.task == "aqa") {
    j = metrics_json("aqa", run_aqa(model, load_aqa(o.dataset)));
  } else {
    const auto data = load_ac(o.dataset);
    const std::size_t max_len = o.max_len ? o.max_len : model.config().max_tokens - 1;
    j = metrics_json("ac", run_ac(model, data, o.beam, max_len), data.size());
  }
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

int cmd_search_build(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "search build");
  require(o.dataset, "--dataset", "search build");
  require(o.out, "--out", "search build");
  auto model = load_model(o);
  const auto index = build_index(model, distinct_graphs(read_jsonl(o.dataset)));
  index.save(o.out);
  out << dump_line(ordered_json{{"entries", index.size()}, {"d", index.dim()}, {"fingerprint", to_hex(index.fingerprint())}});
  return kExitOk;
}

int cmd_search_query(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "search query");
  auto model = load_model(o);
  const auto index = EmbeddingIndex::load(o.index);
  ordered_json j;
  j["query"] = o.query;
  j["hits"] = ordered_json::array();
  std::size_t rank = 1;
  for (const auto& h : search(index, o.query, model, o.k)) {
    j["hits"].push_back(ordered_json{{"rank", rank++}, {"id", h.id}, {"score", h.score}});
  }
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

int cmd_reason(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "reason");
  auto model = load_model(o);
  const double tau = o.given("--tau") ? o.tau : model.config().tau;
  const double s = model.score(o.text, load_graph_file(o.graph));
  ordered_json j{{"statement", o.text}, {"score", s}, {"verdict", s > tau ? "correct" : "incorrect"}};
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

int cmd_clone(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "clone");
  auto model = load_model(o);
  const double tau = o.given("--tau") ? o.tau : model.config().tau;
  const auto g1 = load_graph_file(o.graph);
  const auto g2 = load_graph_file(o.graph2);
  const auto e1 = model.graph_embedding(g1);
  const auto e2 = model.graph_embedding(g2);
  const double eps = model.config().cos_eps;
  double s = cosine_similarity(e1, e2, eps);
  ordered_json j;
  j["cosine"] = s;
  if (!o.text.empty()) {
    s = bacd_score(e1, e2, model.text_embedding(o.text), eps);
    j["bacd_score"] = s;
  }
  j["jaccard"] = jaccard_similarity(g1, g2);
  j["verdict"] = s > tau ? "similar" : "dissimilar";
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

int cmd_qa(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "qa");
  auto model = load_model(o);
  const auto probs = model.answer_probabilities(load_graph_file(o.graph), o.question);
  const auto catalog = answer_catalog();
  ordered_json j;
  j["question"] = o.question;
  j["answers"] = ordered_json::array();
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] > 0.5) {
      j["answers"].push_back(ordered_json{{"id", a}, {"answer", a < catalog.size() ? catalog[a] : "?"},
                                          {"probability", probs[a]}});
    }
  }
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

int cmd_caption(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "caption");
  auto model = load_model(o);
  const std::size_t max_len = o.max_len ? o.max_len : model.config().max_tokens - 1;
  ordered_json j{{"caption", model.caption(load_graph_file(o.graph), o.beam, max_len)}};
  emit(dump_line(j), o.out, out);
  return kExitOk;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

int cmd_viz_pca(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.checkpoint, "--checkpoint", "viz pca");
  require(o.dataset, "--dataset", "viz pca");
  auto model = load_model(o);
  const auto graphs = distinct_graphs(read_jsonl(o.dataset));
  std::vector<std::vector<double>> emb;
  for (const auto& [_, g] : graphs) emb.push_back(model.graph_embedding(g));
  const auto pca = pca_project(emb, 2);
  if (!pca.warning.empty()) err << "warning: " << pca.warning << "\n";
  std::ostringstream csv;
  csv.precision(17);
  csv << "label,x,y\n";
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& c = pca.coords[i];
    csv << csv_field(graphs[i].first) << ',' << (c.size() > 0 ? c[0] : 0.0) << ',' << (c.size() > 1 ? c[1] : 0.0)
        << '\n';
  }
  emit(csv.str(), o.out, out);
  return kExitOk;
}

int cmd_viz_dot(const Options& o, std::ostream& out) {
  emit(to_dot(load_graph_file(o.graph)), o.out, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Joint architecture-graph and text representation toolkit", "archbert"};
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--config", o.config, "Config file with [gen], [model] and [train] sections");
  app.add_option("--seed", o.seed, "Seed for every random stream (overrides the config)");
  app.add_option("--out", o.out, "Output file; standard output when empty (train: checkpoint to write)");
  app.add_option("--checkpoint", o.checkpoint, "Model checkpoint (train: optional starting point)");
  app.add_option("--dataset", o.dataset, "JSONL dataset");
  app.add_option("--beam", o.beam, "Beam width for caption decoding");
  app.add_option("--tau", o.tau, "Decision threshold; the checkpoint's value when not given");
  app.add_option("--alpha", o.alpha, "Weight of the masked-architecture loss (overrides the config)");
  o.abl.add_to(&app);
  app.add_option("--k", o.k, "Number of search hits");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset as JSONL");
  gen->add_option("--task", o.task, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"autonet", "aqa", "ac", "acd", "bacd", "tvhf-mine"}));
  gen->add_option("--split", o.split, "Seed stream")->check(CLI::IsMember({"train", "val"}));
  gen->add_option("--count", o.count, "Architectures (pairs for acd/bacd); 0 uses the config value");

  auto* stats = app.add_subcommand("stats", "Summary statistics of a JSONL dataset");
  stats->add_option("dataset", o.dataset, "Dataset file (or --dataset)");

  auto* train = app.add_subcommand("train", "Pre-train or fine-tune a model");
  train->add_option("--task", o.task, "Objective")->required()->check(CLI::IsMember({"pretrain", "aqa", "ac", "acd"}));
  train->add_option("--epochs", o.epochs, "Epochs (overrides the config)");
  train->add_option("--lr", o.lr, "Adam learning rate (overrides the config)");
  train->add_option("--batch-size", o.batch_size, "Samples per optimizer step (overrides the config)");
  train->add_option("--log", o.log, "Per-epoch JSONL loss log; standard output when empty");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline");
  eval->add_option("--task", o.task, "Task")->required()->check(CLI::IsMember({"ar", "acd", "bacd", "aqa", "ac"}));
  eval->add_option("--baseline", o.baseline, "Uni-modal baseline instead of a model")
      ->check(CLI::IsMember({"none", "name", "jaccard"}));
  eval->add_option("--max-len", o.max_len, "Longest generated caption; 0 means max_tokens - 1");

  auto* search_cmd = app.add_subcommand("search", "Architecture search index");
  search_cmd->require_subcommand(1);
  auto* build = search_cmd->add_subcommand("build", "Index every distinct graph of --dataset into --out");
  auto* query = search_cmd->add_subcommand("query", "Rank indexed graphs against a text query");
  query->add_option("--index", o.index, "Index file")->required();
  query->add_option("--query", o.query, "Text query")->required();

  auto* reason = app.add_subcommand("reason", "Score one statement against one graph");
  reason->add_option("--graph", o.graph, "Graph JSON file")->required();
  reason->add_option("--text", o.text, "Statement")->required();

  auto* clone = app.add_subcommand("clone", "Compare two graphs, optionally with a description");
  clone->add_option("--graph", o.graph, "First graph JSON file")->required();
  clone->add_option("--graph2", o.graph2, "Second graph JSON file")->required();
  clone->add_option("--text", o.text, "Optional description for text-assisted comparison");

  auto* qa = app.add_subcommand("qa", "Answer a question about a graph");
  qa->add_option("--graph", o.graph, "Graph JSON file")->required();
  qa->add_option("--question", o.question, "Question")->required();

  auto* caption = app.add_subcommand("caption", "Describe a graph in words");
  caption->add_option("--graph", o.graph, "Graph JSON file")->required();
  caption->add_option("--max-len", o.max_len, "Longest caption; 0 means max_tokens - 1");

  auto* viz = app.add_subcommand("viz", "Exports for plotting tools");
  viz->require_subcommand(1);
  auto* pca = viz->add_subcommand("pca", "2-D PCA of the graph embeddings of --dataset as CSV");
  auto* dot = viz->add_subcommand("dot", "Graphviz text of one graph");
  dot->add_option("--graph", o.graph, "Graph JSON file")->required();

  // Help lists a default for every flag, including switches and empty paths.
  {
    std::vector<CLI::App*> all{&app};
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (auto* opt : all[i]->get_options()) {
        if (opt == all[i]->get_help_ptr() || !opt->get_default_str().empty() || opt->get_required()) continue;
        opt->default_str(opt->get_items_expected_max() == 0 ? "false" : "\"\"");
      }
      for (auto* sc : all[i]->get_subcommands([](CLI::App*) { return true; })) all.push_back(sc);
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::vector<const CLI::App*> apps{&app};
  for (std::size_t i = 0; i < apps.size(); ++i) {
    for (const auto* opt : apps[i]->get_options()) {
      if (opt->count() > 0) {
        for (const auto& l : opt->get_lnames()) o.seen.insert("--" + l);
      }
    }
    for (const auto* s : apps[i]->get_subcommands()) apps.push_back(s);
  }

  try {
    if (*gen) return cmd_gen(o, out);
    if (*stats) return cmd_stats(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out, err);
    if (*build) return cmd_search_build(o, out);
    if (*query) return cmd_search_query(o, out);
    if (*reason) return cmd_reason(o, out);
    if (*clone) return cmd_clone(o, out);
    if (*qa) return cmd_qa(o, out);
    if (*caption) return cmd_caption(o, out);
    if (*pca) return cmd_viz_pca(o, out, err);
    if (*dot) return cmd_viz_dot(o, out);
  } catch (const UsageError& e) {
    err << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const GraphValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace archbert
