#include "archbert/graph_ir.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "archbert/catalog.hpp"
#include "archbert/error.hpp"

namespace archbert {

namespace {

constexpr std::array<const char*, NodeVocab::kReserved> kReservedNodes{"[MASK_NODE]", "[PAD_NODE]",
                                                                       "[UNK_NODE]"};

}  // namespace

NodeVocab::NodeVocab(const std::vector<std::string>& ops) {
  names_.reserve(ops.size() + kReserved);
  for (const char* r : kReservedNodes) names_.emplace_back(r);
  for (const auto& op : ops) names_.push_back(op);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw DataError("node vocabulary: empty op name at id " + std::to_string(i));
    if (!index_.emplace(names_[i], static_cast<OpId>(i)).second) {
      throw DataError("node vocabulary: duplicate op name '" + names_[i] + "'");
    }
  }
}

const NodeVocab& NodeVocab::catalog() {
  static const NodeVocab vocab = [] {
    std::vector<std::string> ops;
    for (const auto& info : op_catalog()) ops.push_back(info.name);
    return NodeVocab(ops);
  }();
  return vocab;
}

NodeVocab NodeVocab::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < kReserved) throw ParseError("node vocabulary needs the three reserved lines");
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (lines[i] != kReservedNodes[i]) {
      throw ParseError("expected reserved token " + std::string(kReservedNodes[i]), i + 1);
    }
  }
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    if (lines[i].empty()) throw ParseError("empty op name", i + 1);
  }
  return NodeVocab(std::vector<std::string>(lines.begin() + kReserved, lines.end()));
}

std::string NodeVocab::serialize() const {
  std::string out;
  for (const auto& n : names_) {
    out += n;
    out += '\n';
  }
  return out;
}

const std::string& NodeVocab::name(OpId id) const {
  if (id >= names_.size()) throw DataError("op id " + std::to_string(id) + " outside node vocabulary");
  return names_[id];
}

std::optional<OpId> NodeVocab::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

OpId NodeVocab::id(std::string_view name) const {
  auto found = find(name);
  if (!found) throw DataError("unknown op name '" + std::string(name) + "'");
  return *found;
}

void ArchGraph::canonicalize() {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool ArchGraph::operator==(const ArchGraph& other) const {
  if (nodes != other.nodes || shapes != other.shapes || name != other.name) return false;
  auto a = edges;
  auto b = other.edges;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return a == b;
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.code + ": " + v.message;
  }
  return out;
}

GraphValidationError::GraphValidationError(ValidationReport report)
    : std::runtime_error("invalid graph: " + report.summary()), report_(std::move(report)) {}

namespace {

// Kahn's algorithm over in-range edges. Returns the order (possibly partial).
std::vector<std::uint32_t> kahn(const ArchGraph& g) {
  const std::size_t m = g.size();
  std::vector<std::vector<std::uint32_t>> succ(m);
  std::vector<std::size_t> indeg(m, 0);
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [u, v] : edges) {
    if (u >= m || v >= m) continue;
    succ[u].push_back(v);
    ++indeg[v];
  }
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t i = 0; i < m; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<std::uint32_t> order;
  order.reserve(m);
  while (!ready.empty()) {
    const auto u = ready.top();
    ready.pop();
    order.push_back(u);
    for (auto v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  return order;
}

Edge find_back_edge(const ArchGraph& g, const std::vector<std::uint32_t>& partial) {
  // Every node Kahn could not emit has a predecessor that was not emitted
  // either, so walking predecessors must revisit a node.
  const std::size_t m = g.size();
  std::vector<bool> done(m, false);
  for (auto u : partial) done[u] = true;
  std::vector<std::vector<std::uint32_t>> pred(m);
  for (const auto& [u, v] : g.edges) {
    if (u < m && v < m && !done[u] && !done[v]) pred[v].push_back(u);
  }
  std::uint32_t start = 0;
  while (start < m && (done[start] || pred[start].empty())) ++start;
  std::vector<int> seen(m, -1);
  std::uint32_t cur = start;
  int step = 0;
  while (seen[cur] < 0) {
    seen[cur] = step++;
    const auto prev = *std::min_element(pred[cur].begin(), pred[cur].end());
    if (seen[prev] >= 0) return {prev, cur};
    cur = prev;
  }
  return {cur, cur};
}

}  // namespace

ValidationReport validate_graph(const ArchGraph& g, const NodeVocab* vocab) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };
  const std::size_t m = g.size();
  if (m == 0) add("empty graph", "graph must have at least one node");
  if (g.shapes.size() != m) {
    add("shape count mismatch", "expected " + std::to_string(m) + " shapes, got " + std::to_string(g.shapes.size()));
  }
  if (vocab) {
    for (std::size_t i = 0; i < m; ++i) {
      if (g.nodes[i] >= vocab->size()) {
        add("node id out of vocabulary", "node " + std::to_string(i) + " has op id " + std::to_string(g.nodes[i]));
      }
    }
  }
  for (const auto& [u, v] : g.edges) {
    if (u >= m || v >= m) {
      add("edge index out of range",
          "edge (" + std::to_string(u) + "," + std::to_string(v) + ") with " + std::to_string(m) + " nodes");
    }
  }
  if (m > 0) {
    auto order = kahn(g);
    if (order.size() != m) {
      const auto [u, v] = find_back_edge(g, order);
      add("cycle", "back edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
  }
  report.ok = report.violations.empty();
  return report;
}

std::vector<std::uint32_t> topo_order(const ArchGraph& g) {
  for (const auto& [u, v] : g.edges) {
    if (u >= g.size() || v >= g.size()) throw DataError("topo_order: edge index out of range");
  }
  auto order = kahn(g);
  if (order.size() != g.size()) {
    const auto [u, v] = find_back_edge(g, order);
    throw DataError("topo_order: cycle detected at back edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
  }
  return order;
}

std::vector<std::uint8_t> attention_mask(const ArchGraph& g, bool use_edges) {
  const std::size_t m = g.size();
  std::vector<std::uint8_t> mask(m * m, use_edges ? 0 : 1);
  if (!use_edges) return mask;
  for (std::size_t i = 0; i < m; ++i) mask[i * m + i] = 1;
  for (const auto& [u, v] : g.edges) {
    mask[u * m + v] = 1;
    mask[v * m + u] = 1;
  }
  return mask;
}

nlohmann::ordered_json graph_to_json(const ArchGraph& g, const NodeVocab& vocab) {
  nlohmann::ordered_json doc;
  if (g.name) doc["name"] = *g.name;
  auto nodes = nlohmann::ordered_json::array();
  for (auto id : g.nodes) nodes.push_back(vocab.name(id));
  doc["nodes"] = std::move(nodes);
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  auto jedges = nlohmann::ordered_json::array();
  for (const auto& [u, v] : edges) jedges.push_back({u, v});
  doc["edges"] = std::move(jedges);
  auto shapes = nlohmann::ordered_json::array();
  for (const auto& s : g.shapes) shapes.push_back({s[0], s[1], s[2], s[3]});
  doc["shapes"] = std::move(shapes);
  return doc;
}

namespace {

std::uint32_t as_index(const nlohmann::json& v, const char* field) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > static_cast<std::int64_t>(UINT32_MAX)) {
    throw ParseError("expected a non-negative integer", 0, field);
  }
  return v.get<std::uint32_t>();
}

}  // namespace

ArchGraph graph_from_json(const nlohmann::json& doc, const NodeVocab& vocab) {
  if (!doc.is_object()) throw ParseError("graph document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "nodes" && key != "edges" && key != "shapes") {
      throw ParseError("unknown key", 0, key);
    }
  }
  ArchGraph g;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ParseError("expected a string", 0, "name");
    g.name = doc["name"].get<std::string>();
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("expected an array", 0, "nodes");
  for (const auto& n : doc["nodes"]) {
    if (!n.is_string()) throw ParseError("expected op-name strings", 0, "nodes");
    auto id = vocab.find(n.get<std::string>());
    if (!id) throw ParseError("unknown op name '" + n.get<std::string>() + "'", 0, "nodes");
    g.nodes.push_back(*id);
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw ParseError("expected an array", 0, "edges");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be [src, dst]", 0, "edges");
      g.edges.emplace_back(as_index(e[0], "edges"), as_index(e[1], "edges"));
    }
  }
  if (!doc.contains("shapes") || !doc["shapes"].is_array()) throw ParseError("expected an array", 0, "shapes");
  for (const auto& s : doc["shapes"]) {
    if (!s.is_array() || s.size() != 4) throw ParseError("each shape must have four entries", 0, "shapes");
    g.shapes.push_back({as_index(s[0], "shapes"), as_index(s[1], "shapes"), as_index(s[2], "shapes"),
                        as_index(s[3], "shapes")});
  }
  auto report = validate_graph(g, &vocab);
  if (!report.ok) throw GraphValidationError(std::move(report));
  g.canonicalize();
  return g;
}

ArchGraph parse_graph(std::string_view text, const NodeVocab& vocab) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  return graph_from_json(doc, vocab);
}

std::string serialize_graph(const ArchGraph& g, const NodeVocab& vocab) { return graph_to_json(g, vocab).dump(); }

std::string to_dot(const ArchGraph& g, const NodeVocab& vocab) {
  std::ostringstream out;
  std::string title = g.name.value_or("arch");
  std::string escaped;
  for (char c : title) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c;
  }
  out << "digraph \"" << escaped << "\" {\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& s = g.shapes[i];
    out << "  n" << i << " [label=\"" << vocab.name(g.nodes[i]);
    if (s != kNoParams) out << "\\n(" << s[0] << "," << s[1] << "," << s[2] << "," << s[3] << ")";
    out << "\"];\n";
  }
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end());
  for (const auto& [u, v] : edges) out << "  n" << u << " -> n" << v << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace archbert
