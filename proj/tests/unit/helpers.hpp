#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "archbert/graph_ir.hpp"

namespace archbert::testing {

/// Graph over catalog op names.
inline ArchGraph make_graph(std::initializer_list<const char*> ops, std::vector<Edge> edges) {
  ArchGraph g;
  for (const char* op : ops) {
    g.nodes.push_back(NodeVocab::catalog().id(op));
    g.shapes.push_back(kNoParams);
  }
  g.edges = std::move(edges);
  g.canonicalize();
  return g;
}

inline ArchGraph chain(std::initializer_list<const char*> ops) {
  std::vector<Edge> edges;
  for (std::uint32_t i = 1; i < ops.size(); ++i) edges.emplace_back(i - 1, i);
  return make_graph(ops, edges);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("archbert_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace archbert::testing
