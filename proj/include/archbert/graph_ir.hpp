#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace archbert {

using OpId = std::uint32_t;

/// Operation vocabulary. Ids 0..2 are reserved for the mask, pad and
/// unknown node markers; the remaining ids are real operation names.
class NodeVocab {
 public:
  static constexpr OpId kMask = 0;
  static constexpr OpId kPad = 1;
  static constexpr OpId kUnk = 2;
  static constexpr std::size_t kReserved = 3;

  NodeVocab() = default;
  /// `ops` excludes the reserved markers; duplicates are rejected.
  explicit NodeVocab(const std::vector<std::string>& ops);

  /// Vocabulary over the full built-in operation catalog.
  static const NodeVocab& catalog();

  /// Parses the one-name-per-line file format.
  static NodeVocab parse(std::string_view text);
  std::string serialize() const;

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(OpId id) const;
  std::optional<OpId> find(std::string_view name) const;
  OpId id(std::string_view name) const;  // throws DataError when absent
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const NodeVocab& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, OpId> index_;
};

/// Parameter shape of a node: (out-channels, in-channels, kernel-h, kernel-w).
using ParamShape = std::array<std::uint32_t, 4>;
inline constexpr ParamShape kNoParams{0, 0, 0, 0};

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Directed acyclic operation graph.
struct ArchGraph {
  std::vector<OpId> nodes;
  std::vector<Edge> edges;
  std::vector<ParamShape> shapes;
  std::optional<std::string> name;

  std::size_t size() const noexcept { return nodes.size(); }

  /// Edge list sorted and deduplicated; equality uses canonical edges.
  void canonicalize();
  bool operator==(const ArchGraph& other) const;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  bool has(std::string_view code) const;
  std::string summary() const;
};

class GraphValidationError : public std::runtime_error {
 public:
  explicit GraphValidationError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Lists every violated invariant; never throws. Node ids are checked
/// against `vocab` when one is given.
ValidationReport validate_graph(const ArchGraph& g, const NodeVocab* vocab = nullptr);

/// Kahn's algorithm, smallest ready index first. Throws DataError naming a
/// back edge if the graph has a cycle.
std::vector<std::uint32_t> topo_order(const ArchGraph& g);

/// Dense m x m mask, row-major. With `use_edges` the adjacency is
/// symmetrized and self-loops added; otherwise everything is visible.
std::vector<std::uint8_t> attention_mask(const ArchGraph& g, bool use_edges);

nlohmann::ordered_json graph_to_json(const ArchGraph& g, const NodeVocab& vocab);
ArchGraph graph_from_json(const nlohmann::json& doc, const NodeVocab& vocab);

/// Parses a graph document. Throws ParseError for malformed input and
/// GraphValidationError for well-formed graphs that break an invariant.
ArchGraph parse_graph(std::string_view text, const NodeVocab& vocab = NodeVocab::catalog());

/// Canonical compact JSON: stored node order, sorted edges.
std::string serialize_graph(const ArchGraph& g, const NodeVocab& vocab = NodeVocab::catalog());

/// Graphviz digraph text.
std::string to_dot(const ArchGraph& g, const NodeVocab& vocab = NodeVocab::catalog());

}  // namespace archbert
