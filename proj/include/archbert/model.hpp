#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "archbert/graph_ir.hpp"
#include "archbert/numerics/autodiff.hpp"
#include "archbert/textkit.hpp"

namespace archbert {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t gat_layers = 2;
  std::size_t gat_heads = 2;
  std::size_t cross_layers = 2;
  std::size_t cross_heads = 4;
  std::size_t decoder_layers = 1;
  std::size_t decoder_heads = 4;
  std::size_t max_nodes = 64;
  std::size_t max_tokens = 64;
  std::size_t shape_buckets = 16;
  std::size_t answer_count = 51;
  std::size_t vocab_max_size = 2000;
  double cos_eps = 1e-8;
  double mask_ratio = 0.15;
  double tau = 0.5;
  double alpha = 5e-2;
  std::uint64_t init_seed = 0;
  bool no_shape = false;
  bool no_edge = false;
  bool no_mam = false;
  bool no_cross_encoder = false;
  bool text_only = false;
  bool arch_only = false;

  /// Throws DataError on a broken invariant.
  void validate() const;
  /// Sets one field from its key=value spelling; throws DataError for
  /// unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
  std::string get(const std::string& key) const;

  std::string serialize() const;
  static ModelConfig parse(const std::string& text);
};

/// min(floor(log2(x + 1)), buckets - 1).
std::size_t shape_bucket(std::uint32_t x, std::size_t buckets);

/// Cross-encoded sequence, its padding mask and the pooled vector.
struct Encoded {
  Var H;
  Var J;
  std::vector<bool> keep;
};

class Model {
 public:
  Model(ModelConfig cfg, TextVocab text_vocab, NodeVocab node_vocab = NodeVocab::catalog());

  /// Checkpoint at `path` plus `path`.cfg, `path`.vocab and `path`.nodevocab.
  void save(const std::string& path) const;
  static Model load(const std::string& path);

  const ModelConfig& config() const noexcept { return cfg_; }
  ModelConfig& mutable_config() noexcept { return cfg_; }
  const TextVocab& text_vocab() const noexcept { return text_vocab_; }
  const NodeVocab& node_vocab() const noexcept { return node_vocab_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Replaces parameter values; names and shapes must match exactly.
  void load_params(const ParamStore& values);

  // Differentiable building blocks.
  Var embed_text(Tape& t, const TokenSeq& seq);
  Var embed_nodes_shapes(Tape& t, const ArchGraph& g);
  Var gat_forward(Tape& t, Var features, const std::vector<std::uint8_t>& mask);
  Var cross_encode(Tape& t, Var seq, const std::vector<bool>& keep);
  Var pool(Tape& t, Var H, const std::vector<bool>& keep);
  Var mam_logits(Tape& t, Var H_g);
  Var aqa_logits(Tape& t, Var J_t, Var J_g);
  /// Logits (len x |C|) for next-token prediction at every input position.
  Var decoder_logits(Tape& t, Var H_g, const std::vector<TokenId>& inputs);

  TokenSeq tokenize(const std::string& text) const;
  Encoded encode_text(Tape& t, const TokenSeq& seq);
  Encoded encode_text(Tape& t, const std::string& text) { return encode_text(t, tokenize(text)); }
  /// Graph path (E_v + E_s, GAT, E_c, pool). With text_only the graph is
  /// read through the text path as its op listing.
  Encoded encode_graph(Tape& t, const ArchGraph& g);

  // Inference helpers; no gradients are recorded.
  std::vector<double> text_embedding(const std::string& text);
  std::vector<double> graph_embedding(const ArchGraph& g);
  double score(const std::string& text, const ArchGraph& g);
  std::vector<double> answer_probabilities(const ArchGraph& g, const std::string& question);
  std::vector<TokenId> decode_beam(const ArchGraph& g, std::size_t beam, std::size_t max_len);
  std::string caption(const ArchGraph& g, std::size_t beam, std::size_t max_len);

 private:
  Var linear(Tape& t, Var x, const std::string& prefix);
  Var attention(Tape& t, Var q_in, Var kv_in, const std::vector<std::uint8_t>& mask, std::size_t heads,
                const std::string& prefix);
  Var ln(Tape& t, Var x, const std::string& prefix);
  Var p(Tape& t, const std::string& name) { return t.param(params_.get(name)); }
  std::string dec_prefix(std::size_t layer) const;
  void init_params();

  ModelConfig cfg_;
  TextVocab text_vocab_;
  NodeVocab node_vocab_;
  ParamStore params_;
};

}  // namespace archbert
