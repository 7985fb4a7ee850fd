#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "archbert/graph_ir.hpp"
#include "archbert/rng.hpp"

namespace archbert {

struct GenConfig {
  std::uint64_t rng_seed = 0;
  std::vector<std::string> op_vocab = default_op_vocab();
  std::uint32_t min_nodes = 8;
  std::uint32_t max_nodes = 64;
  std::size_t num_archs = 200;
  std::size_t num_val_archs = 50;
  std::size_t min_descriptions = 10;
  std::size_t max_descriptions = 11;
  double positive_fraction = 0.3;
  std::size_t questions_per_arch = 35;
  std::size_t answer_catalog_size = 51;
  double beta = 0.5;
  double skip_edge_prob = 0.15;
  // Clone-detection pairs.
  std::size_t acd_pairs = 1000;
  double acd_positive_fraction = 0.11;
  std::size_t families = 20;
  std::size_t family_size = 4;
  // Negative-mined bi-modal pairs.
  double mined_negative_fraction = 0.93;

  static std::vector<std::string> default_op_vocab();
  /// Throws DataError if an invariant is broken.
  void validate() const;
};

struct BiModalSample {
  ArchGraph graph;
  std::string text;
  double y = 0.0;
};

struct AQASample {
  ArchGraph graph;
  std::string question;
  std::vector<std::uint32_t> answers;  // sorted answer-catalog ids
};

struct ACDPair {
  ArchGraph g1;
  ArchGraph g2;
  int label = 0;
};

struct BACDSample {
  ArchGraph g1;
  ArchGraph g2;
  std::string text;
  int label = 0;
};

struct ACSample {
  ArchGraph graph;
  std::string caption;
};

/// Distinct op names of the graph.
std::set<std::string> extract_present_ops(const ArchGraph& g, const NodeVocab& vocab = NodeVocab::catalog());

/// Catalog op names that occur as words in `text`. Used as the oracle for
/// what a generated description claims about an architecture.
std::set<std::string> mentioned_ops(const std::string& text);

ArchGraph gen_architecture(const GenConfig& cfg, Rng& rng);

/// 10-11 samples; the positive ones mention only present ops.
std::vector<BiModalSample> gen_descriptions(const ArchGraph& g, const GenConfig& cfg, Rng& rng);

/// Exactly 35 questions with answers from the frozen catalog.
std::vector<AQASample> gen_qa(const ArchGraph& g, const GenConfig& cfg, Rng& rng);

/// Jaccard overlap of the normalized word sets; 0 when both are empty.
double token_overlap_similarity(const std::string& a, const std::string& b);

using SimilarityFn = std::function<double(const std::string&, const std::string&)>;

/// For every architecture, the foreign descriptions whose best match
/// against its own positives is at most `beta`. Output lists are sorted.
std::map<std::string, std::vector<std::string>> mine_negatives(
    const std::map<std::string, std::vector<std::string>>& positives, const SimilarityFn& sim, double beta);

struct TaggedArch {
  ArchGraph graph;
  std::string family;
};

/// Samples `count` pairs; each is a same-family pair (label 1) with
/// probability `positive_fraction`, otherwise a cross-family pair.
std::vector<ACDPair> gen_acd_pairs(const std::vector<TaggedArch>& archs, Rng& rng, double positive_fraction,
                                   std::size_t count);

/// Structural variant of `base` for clone-detection families.
ArchGraph mutate_architecture(const ArchGraph& base, const GenConfig& cfg, Rng& rng);

/// `families` base architectures with `family_size` members each.
std::vector<TaggedArch> gen_families(const GenConfig& cfg, Rng& rng);

/// Human-readable op listing used as the graph-side input of text-only models.
std::string graph_summary_text(const ArchGraph& g, const NodeVocab& vocab = NodeVocab::catalog());

/// Whole datasets; `split_offset` separates train/val seed streams.
std::vector<BiModalSample> gen_autonet(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset = 0);
std::vector<AQASample> gen_autonet_qa(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset = 0);
std::vector<ACDPair> gen_acd_dataset(const GenConfig& cfg, std::uint64_t split_offset = 0);
std::vector<BACDSample> gen_bacd_dataset(const GenConfig& cfg, std::uint64_t split_offset = 0);
/// Positives from generated architectures plus mined negatives.
std::vector<BiModalSample> gen_mined(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset = 0);

}  // namespace archbert
