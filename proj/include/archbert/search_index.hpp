#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "archbert/model.hpp"

namespace archbert {

using Fingerprint = std::array<std::uint8_t, 32>;

Fingerprint sha256(const std::string& bytes);
std::string to_hex(const Fingerprint& f);
/// SHA-256 of the model's checkpoint serialization.
Fingerprint model_fingerprint(const Model& model);

struct IndexEntry {
  std::string id;
  std::vector<double> vec;  // unit norm, or all zeros when `zero`
  bool zero = false;
};

struct SearchHit {
  std::string id;
  double score = 0.0;
};

inline constexpr std::uint32_t kIndexVersion = 1;

/// Flat cosine index over pooled architecture embeddings.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  EmbeddingIndex(std::size_t d, Fingerprint fingerprint);

  /// Throws DataError on a duplicate id or a wrong-length vector.
  void add(const std::string& id, const std::vector<double>& vec);

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }

  /// Top-k by cosine, descending; ties by id. k larger than the index
  /// returns everything.
  std::vector<SearchHit> search_vector(const std::vector<double>& query, std::size_t k) const;

  std::string to_bytes() const;
  static EmbeddingIndex from_bytes(const std::string& bytes);
  void save(const std::string& path) const;
  static EmbeddingIndex load(const std::string& path);

 private:
  std::size_t d_ = 0;
  Fingerprint fingerprint_{};
  std::vector<IndexEntry> entries_;
};

EmbeddingIndex build_index(Model& model, const std::vector<std::pair<std::string, ArchGraph>>& graphs);

/// Encodes `query` through the text path and ranks the index. Refuses
/// when the index was built from a different checkpoint.
std::vector<SearchHit> search(const EmbeddingIndex& index, const std::string& query, Model& model, std::size_t k);

}  // namespace archbert
