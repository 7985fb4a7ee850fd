#include "archbert/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "archbert/catalog.hpp"
#include "archbert/error.hpp"

namespace archbert {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::BiModal: return "bimodal";
    case RecordKind::AQA: return "aqa";
    case RecordKind::ACD: return "acd";
    case RecordKind::BACD: return "bacd";
    case RecordKind::AC: return "ac";
  }
  return "?";
}

RecordKind detect_record_kind(const json& doc) {
  if (!doc.is_object()) throw ParseError("record is not a JSON object");
  if (doc.contains("g1")) return doc.contains("text") ? RecordKind::BACD : RecordKind::ACD;
  if (doc.contains("question")) return RecordKind::AQA;
  if (doc.contains("caption")) return RecordKind::AC;
  if (doc.contains("text")) return RecordKind::BiModal;
  throw ParseError("record kind not recognized");
}

namespace {

void require_keys(const json& doc, std::initializer_list<const char*> keys) {
  if (!doc.is_object()) throw ParseError("record is not a JSON object");
  for (const char* k : keys) {
    if (!doc.contains(k)) throw ParseError(std::string("missing field '") + k + "'", 0, k);
  }
  for (const auto& [k, _] : doc.items()) {
    bool known = false;
    for (const char* want : keys) known = known || k == want;
    if (!known) throw ParseError("unknown field '" + k + "'", 0, k);
  }
}

template <typename T>
T field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what(), 0, key);
  }
}

ArchGraph graph_field(const json& doc, const char* key) { return graph_from_json(doc.at(key), NodeVocab::catalog()); }

}  // namespace

ordered_json to_json(const BiModalSample& s) {
  ordered_json j;
  j["graph"] = graph_to_json(s.graph, NodeVocab::catalog());
  j["text"] = s.text;
  j["y"] = s.y;
  return j;
}

ordered_json to_json(const AQASample& s) {
  ordered_json j;
  j["graph"] = graph_to_json(s.graph, NodeVocab::catalog());
  j["question"] = s.question;
  j["answers"] = s.answers;
  return j;
}

ordered_json to_json(const ACDPair& s) {
  ordered_json j;
  j["g1"] = graph_to_json(s.g1, NodeVocab::catalog());
  j["g2"] = graph_to_json(s.g2, NodeVocab::catalog());
  j["label"] = s.label;
  return j;
}

ordered_json to_json(const BACDSample& s) {
  ordered_json j;
  j["g1"] = graph_to_json(s.g1, NodeVocab::catalog());
  j["g2"] = graph_to_json(s.g2, NodeVocab::catalog());
  j["text"] = s.text;
  j["label"] = s.label;
  return j;
}

ordered_json to_json(const ACSample& s) {
  ordered_json j;
  j["graph"] = graph_to_json(s.graph, NodeVocab::catalog());
  j["caption"] = s.caption;
  return j;
}

BiModalSample bimodal_from_json(const json& doc) {
  require_keys(doc, {"graph", "text", "y"});
  BiModalSample s{graph_field(doc, "graph"), field<std::string>(doc, "text"), field<double>(doc, "y")};
  if (!(s.y >= 0.0 && s.y <= 1.0)) throw DataError("bi-modal score y outside [0, 1]");
  return s;
}

AQASample aqa_from_json(const json& doc) {
  require_keys(doc, {"graph", "question", "answers"});
  AQASample s{graph_field(doc, "graph"), field<std::string>(doc, "question"),
              field<std::vector<std::uint32_t>>(doc, "answers")};
  if (s.answers.empty()) throw DataError("AQA record has no answers");
  for (auto a : s.answers) {
    if (a >= kAnswerCount) throw DataError("AQA answer id " + std::to_string(a) + " outside the catalog");
  }
  std::sort(s.answers.begin(), s.answers.end());
  s.answers.erase(std::unique(s.answers.begin(), s.answers.end()), s.answers.end());
  return s;
}

namespace {
int label_field(const json& doc) {
  const int label = field<int>(doc, "label");
  if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
  return label;
}
}  // namespace

ACDPair acd_from_json(const json& doc) {
  require_keys(doc, {"g1", "g2", "label"});
  return {graph_field(doc, "g1"), graph_field(doc, "g2"), label_field(doc)};
}

BACDSample bacd_from_json(const json& doc) {
  require_keys(doc, {"g1", "g2", "text", "label"});
  return {graph_field(doc, "g1"), graph_field(doc, "g2"), field<std::string>(doc, "text"), label_field(doc)};
}

ACSample ac_from_json(const json& doc) {
  require_keys(doc, {"graph", "caption"});
  return {graph_field(doc, "graph"), field<std::string>(doc, "caption")};
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what(), lineno);
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_jsonl(out, records);
  if (!out) throw DataError("write failed for " + path);
}

template void write_jsonl(const std::string&, const std::vector<BiModalSample>&);
template void write_jsonl(const std::string&, const std::vector<AQASample>&);
template void write_jsonl(const std::string&, const std::vector<ACDPair>&);
template void write_jsonl(const std::string&, const std::vector<BACDSample>&);
template void write_jsonl(const std::string&, const std::vector<ACSample>&);

namespace {

template <typename T, typename F>
std::vector<T> load_all(const std::string& path, F&& parse) {
  std::vector<T> out;
  std::size_t lineno = 0;
  for (const auto& doc : read_jsonl(path)) {
    ++lineno;
    try {
      out.push_back(parse(doc));
    } catch (const ParseError& e) {
      throw ParseError(path + ": record " + std::to_string(lineno) + ": " + e.what(), lineno, e.field());
    }
  }
  if (out.empty()) throw DataError(path + ": dataset is empty");
  return out;
}

}  // namespace

std::vector<BiModalSample> load_bimodal(const std::string& path) {
  return load_all<BiModalSample>(path, bimodal_from_json);
}
std::vector<AQASample> load_aqa(const std::string& path) { return load_all<AQASample>(path, aqa_from_json); }
std::vector<ACDPair> load_acd(const std::string& path) { return load_all<ACDPair>(path, acd_from_json); }
std::vector<BACDSample> load_bacd(const std::string& path) { return load_all<BACDSample>(path, bacd_from_json); }

std::vector<ACSample> load_ac(const std::string& path) {
  auto docs = read_jsonl(path);
  if (!docs.empty() && detect_record_kind(docs.front()) == RecordKind::BiModal) {
    return captions_from_bimodal(load_bimodal(path));
  }
  return load_all<ACSample>(path, ac_from_json);
}

std::vector<ACSample> captions_from_bimodal(const std::vector<BiModalSample>& samples) {
  std::vector<ACSample> out;
  for (const auto& s : samples) {
    if (s.y != 1.0) continue;
    bool seen = false;
    for (const auto& o : out) seen = seen || o.graph == s.graph;
    if (!seen) out.push_back({s.graph, s.text});
  }
  return out;
}

DatasetStats dataset_stats(const std::vector<json>& records) {
  if (records.empty()) throw DataError("dataset is empty");
  DatasetStats st;
  const auto kind = detect_record_kind(records.front());
  st.kind = std::string(record_kind_name(kind));
  st.records = records.size();
  std::set<std::string> archs;
  std::set<OpId> ops;
  std::size_t node_total = 0;
  std::size_t positives = 0;
  st.min_nodes = std::numeric_limits<std::size_t>::max();
  auto visit = [&](const ArchGraph& g) {
    const auto key = serialize_graph(g);
    if (!archs.insert(key).second) return;
    node_total += g.size();
    st.max_nodes = std::max(st.max_nodes, g.size());
    st.min_nodes = std::min(st.min_nodes, g.size());
    ops.insert(g.nodes.begin(), g.nodes.end());
  };
  for (const auto& doc : records) {
    if (detect_record_kind(doc) != kind) throw DataError("dataset mixes record kinds");
    switch (kind) {
      case RecordKind::BiModal: {
        auto s = bimodal_from_json(doc);
        visit(s.graph);
        positives += s.y == 1.0;
        break;
      }
      case RecordKind::AQA: visit(aqa_from_json(doc).graph); break;
      case RecordKind::ACD: {
        auto p = acd_from_json(doc);
        visit(p.g1);
        visit(p.g2);
        positives += p.label == 1;
        break;
      }
      case RecordKind::BACD: {
        auto p = bacd_from_json(doc);
        visit(p.g1);
        visit(p.g2);
        positives += p.label == 1;
        break;
      }
      case RecordKind::AC: visit(ac_from_json(doc).graph); break;
    }
  }
  st.architectures = archs.size();
  st.mean_nodes = static_cast<double>(node_total) / static_cast<double>(archs.size());
  st.unique_ops = ops.size();
  st.positive_fraction = static_cast<double>(positives) / static_cast<double>(records.size());
  st.samples_per_arch = static_cast<double>(records.size()) / static_cast<double>(archs.size());
  return st;
}

ordered_json to_json(const DatasetStats& s) {
  ordered_json j;
  j["kind"] = s.kind;
  j["records"] = s.records;
  j["architectures"] = s.architectures;
  j["mean_nodes"] = s.mean_nodes;
  j["min_nodes"] = s.min_nodes;
  j["max_nodes"] = s.max_nodes;
  j["unique_ops"] = s.unique_ops;
  j["positive_fraction"] = s.positive_fraction;
  j["samples_per_arch"] = s.samples_per_arch;
  return j;
}

}  // namespace archbert
