#include "archbert/model.hpp"

#include <cmath>
#include <sstream>

#include "archbert/beam.hpp"
#include "archbert/datagen.hpp"
#include "archbert/error.hpp"
#include "archbert/numerics/checkpoint.hpp"
#include "archbert/rng.hpp"

namespace archbert {

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  if (pos != v.size()) throw DataError("config key '" + key + "': trailing characters in '" + v + "'");
  return static_cast<std::size_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw DataError("config key '" + key + "': bad number '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw DataError("ModelConfig: " + m); };
  if (d == 0) fail("d must be positive");
  if (gat_heads == 0 || d % gat_heads) fail("d must be divisible by gat_heads");
  if (cross_heads == 0 || d % cross_heads) fail("d must be divisible by cross_heads");
  if (decoder_heads == 0 || d % decoder_heads) fail("d must be divisible by decoder_heads");
  if (decoder_layers == 0) fail("decoder_layers must be at least 1");
  if (max_nodes == 0) fail("max_nodes must be positive");
  if (max_tokens < 3) fail("max_tokens must be at least 3");
  if (shape_buckets == 0) fail("shape_buckets must be positive");
  if (answer_count == 0) fail("answer_count must be positive");
  if (vocab_max_size < TextVocab::kReserved) fail("vocab_max_size must be at least 5");
  if (!(cos_eps > 0.0)) fail("cos_eps must be positive");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) fail("mask_ratio must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) fail("tau must lie in (0, 1)");
  if (!(alpha >= 0.0)) fail("alpha must be non-negative");
  if (text_only && arch_only) fail("text_only and arch_only exclude each other");
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> k = {
      "d",         "gat_layers", "gat_heads",   "cross_layers",   "cross_heads",      "decoder_layers",
      "decoder_heads", "max_nodes", "max_tokens", "shape_buckets", "answer_count",   "vocab_max_size",
      "cos_eps",   "mask_ratio", "tau",         "alpha",          "init_seed",        "no_shape",
      "no_edge",   "no_mam",     "no_cross_encoder", "text_only", "arch_only"};
  return k;
}

void ModelConfig::set(const std::string& key, const std::string& v) {
  if (key == "d") d = parse_size(key, v);
  else if (key == "gat_layers") gat_layers = parse_size(key, v);
  else if (key == "gat_heads") gat_heads = parse_size(key, v);
  else if (key == "cross_layers") cross_layers = parse_size(key, v);
  else if (key == "cross_heads") cross_heads = parse_size(key, v);
  else if (key == "decoder_layers") decoder_layers = parse_size(key, v);
  else if (key == "decoder_heads") decoder_heads = parse_size(key, v);
  else if (key == "max_nodes") max_nodes = parse_size(key, v);
  else if (key == "max_tokens") max_tokens = parse_size(key, v);
  else if (key == "shape_buckets") shape_buckets = parse_size(key, v);
  else if (key == "answer_count") answer_count = parse_size(key, v);
  else if (key == "vocab_max_size") vocab_max_size = parse_size(key, v);
  else if (key == "cos_eps") cos_eps = parse_double(key, v);
  else if (key == "mask_ratio") mask_ratio = parse_double(key, v);
  else if (key == "tau") tau = parse_double(key, v);
  else if (key == "alpha") alpha = parse_double(key, v);
  else if (key == "init_seed") init_seed = parse_size(key, v);
  else if (key == "no_shape") no_shape = parse_bool(key, v);
  else if (key == "no_edge") no_edge = parse_bool(key, v);
  else if (key == "no_mam") no_mam = parse_bool(key, v);
  else if (key == "no_cross_encoder") no_cross_encoder = parse_bool(key, v);
  else if (key == "text_only") text_only = parse_bool(key, v);
  else if (key == "arch_only") arch_only = parse_bool(key, v);
  else throw DataError("unknown model config key '" + key + "'");
}

std::string ModelConfig::get(const std::string& key) const {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  if (key == "d") return std::to_string(d);
  if (key == "gat_layers") return std::to_string(gat_layers);
  if (key == "gat_heads") return std::to_string(gat_heads);
  if (key == "cross_layers") return std::to_string(cross_layers);
  if (key == "cross_heads") return std::to_string(cross_heads);
  if (key == "decoder_layers") return std::to_string(decoder_layers);
  if (key == "decoder_heads") return std::to_string(decoder_heads);
  if (key == "max_nodes") return std::to_string(max_nodes);
  if (key == "max_tokens") return std::to_string(max_tokens);
  if (key == "shape_buckets") return std::to_string(shape_buckets);
  if (key == "answer_count") return std::to_string(answer_count);
  if (key == "vocab_max_size") return std::to_string(vocab_max_size);
  if (key == "cos_eps") return fmt_double(cos_eps);
  if (key == "mask_ratio") return fmt_double(mask_ratio);
  if (key == "tau") return fmt_double(tau);
  if (key == "alpha") return fmt_double(alpha);
  if (key == "init_seed") return std::to_string(init_seed);
  if (key == "no_shape") return b(no_shape);
  if (key == "no_edge") return b(no_edge);
  if (key == "no_mam") return b(no_mam);
  if (key == "no_cross_encoder") return b(no_cross_encoder);
  if (key == "text_only") return b(text_only);
  if (key == "arch_only") return b(arch_only);
  throw DataError("unknown model config key '" + key + "'");
}

std::string ModelConfig::serialize() const {
  std::string out;
  for (const auto& k : keys()) out += k + "=" + get(k) + "\n";
  return out;
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("model config: expected key=value", lineno);
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::size_t shape_bucket(std::uint32_t x, std::size_t buckets) {
  // floor(log2(x + 1)) as the bit width of x + 1, minus one.
  const auto v = static_cast<std::uint64_t>(x) + 1;
  std::size_t b = 0;
  while ((v >> (b + 1)) != 0) ++b;
  return std::min(b, buckets - 1);
}

Model::Model(ModelConfig cfg, TextVocab text_vocab, NodeVocab node_vocab)
    : cfg_(std::move(cfg)), text_vocab_(std::move(text_vocab)), node_vocab_(std::move(node_vocab)) {
  cfg_.validate();
  init_params();
}

std::string Model::dec_prefix(std::size_t layer) const {
  return layer == 0 ? std::string("dec.") : "dec." + std::to_string(layer) + ".";
}

void Model::init_params() {
  const std::size_t d = cfg_.d, C = text_vocab_.size(), E = node_vocab_.size();
  Rng rng(mix_seed(cfg_.init_seed));
  auto uniform = [&](const std::string& name, std::size_t r, std::size_t c, double bound) {
    Tensor t(r, c);
    for (auto& x : t.data()) x = rng.uniform(-bound, bound);
    params_.add(name, std::move(t));
  };
  auto embedding = [&](const std::string& name, std::size_t r) { uniform(name, r, d, 0.02); };
  auto linear = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    uniform(prefix + ".w", in, out, 1.0 / std::sqrt(static_cast<double>(in)));
    params_.add(prefix + ".b", Tensor(1, out));
  };
  auto norm = [&](const std::string& prefix) {
    params_.add(prefix + ".gamma", Tensor(1, d, 1.0));
    params_.add(prefix + ".beta", Tensor(1, d));
  };
  auto attn = [&](const std::string& prefix) {
    for (const char* w : {"q", "k", "v", "o"}) linear(prefix + "." + w, d, d);
  };

  embedding("text.tok_emb", C);
  embedding("text.pos_emb", cfg_.max_tokens);
  embedding("arch.node_emb", E);
  for (int k = 0; k < 4; ++k) embedding("arch.shape_emb." + std::to_string(k), cfg_.shape_buckets);

  const std::size_t dh = d / cfg_.gat_heads;
  for (std::size_t l = 0; l < cfg_.gat_layers; ++l) {
    const auto L = "gat." + std::to_string(l);
    for (std::size_t h = 0; h < cfg_.gat_heads; ++h) {
      const auto H = L + "." + std::to_string(h);
      uniform(H + ".W", d, dh, 1.0 / std::sqrt(static_cast<double>(d)));
      uniform(H + ".a", 2, dh, 1.0 / std::sqrt(static_cast<double>(dh)));
    }
    linear(L + ".proj", d, d);
  }
  for (std::size_t l = 0; l < cfg_.cross_layers; ++l) {
    const auto L = "cross." + std::to_string(l);
    norm(L + ".ln.1");
    attn(L + ".attn");
    norm(L + ".ln.2");
    linear(L + ".ffn.fc1", d, 4 * d);
    linear(L + ".ffn.fc2", 4 * d, d);
  }
  linear("head.mam.proj", d, E);
  linear("head.aqa.fc1", d, d);
  linear("head.aqa.fc2", d, cfg_.answer_count);

  embedding("dec.tok_emb", C);
  embedding("dec.pos_emb", cfg_.max_tokens);
  for (std::size_t l = 0; l < cfg_.decoder_layers; ++l) {
    const auto P = dec_prefix(l);
    norm(P + "ln.1");
    attn(P + "attn");
    norm(P + "ln.2");
    attn(P + "xattn");
    norm(P + "ln.3");
    linear(P + "ffn.fc1", d, 4 * d);
    linear(P + "ffn.fc2", 4 * d, d);
  }
  norm("dec.ln.f");
  linear("dec.out.fc1", d, d);
  linear("dec.out.fc2", d, C);
}

void Model::load_params(const ParamStore& values) {
  if (values.size() != params_.size()) {
    throw DataError("checkpoint has " + std::to_string(values.size()) + " tensors, model expects " +
                    std::to_string(params_.size()));
  }
  for (auto& [name, p] : params_.items()) {
    if (!values.contains(name)) throw DataError("checkpoint lacks tensor '" + name + "'");
    const auto& v = values.get(name).value;
    if (v.shape() != p.value.shape()) throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    p.value = v;
    p.grad.fill(0.0);
  }
}

void Model::save(const std::string& path) const {
  save_checkpoint(params_, path);
  write_file_bytes(path + ".cfg", cfg_.serialize());
  write_file_bytes(path + ".vocab", text_vocab_.serialize());
  write_file_bytes(path + ".nodevocab", node_vocab_.serialize());
}

Model Model::load(const std::string& path) {
  auto params = load_checkpoint(path);
  auto cfg = ModelConfig::parse(read_file_bytes(path + ".cfg"));
  auto vocab = TextVocab::parse(read_file_bytes(path + ".vocab"));
  auto nodes = NodeVocab::parse(read_file_bytes(path + ".nodevocab"));
  Model m(cfg, std::move(vocab), std::move(nodes));
  m.load_params(params);
  return m;
}

Var Model::linear(Tape& t, Var x, const std::string& prefix) {
  return add(matmul(x, p(t, prefix + ".w")), p(t, prefix + ".b"));
}

Var Model::ln(Tape& t, Var x, const std::string& prefix) {
  return layer_norm(x, p(t, prefix + ".gamma"), p(t, prefix + ".beta"));
}

Var Model::attention(Tape& t, Var q_in, Var kv_in, const std::vector<std::uint8_t>& mask, std::size_t heads,
                     const std::string& prefix) {
  const auto q = linear(t, q_in, prefix + ".q");
  const auto k = linear(t, kv_in, prefix + ".k");
  const auto v = linear(t, kv_in, prefix + ".v");
  const std::size_t dh = cfg_.d / heads;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = slice_cols(q, h * dh, dh);
    const auto kh = slice_cols(k, h * dh, dh);
    const auto vh = slice_cols(v, h * dh, dh);
    const auto probs = masked_softmax(scale(matmul(qh, transpose(kh)), s), mask);
    outs.push_back(matmul(probs, vh));
  }
  return linear(t, heads == 1 ? outs.front() : concat_cols(outs), prefix + ".o");
}

TokenSeq Model::tokenize(const std::string& text) const {
  return archbert::tokenize(text, text_vocab_, cfg_.max_tokens);
}

Var Model::embed_text(Tape& t, const TokenSeq& seq) {
  if (cfg_.arch_only) throw DataError("the text encoder is disabled (arch_only)");
  const std::size_t n = seq.ids.size();
  if (n > cfg_.max_tokens) {
    throw DataError("token sequence of length " + std::to_string(n) + " exceeds max_tokens " +
                    std::to_string(cfg_.max_tokens));
  }
  std::vector<std::size_t> ids(n), pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.ids[i] >= text_vocab_.size()) throw DataError("token id out of vocabulary");
    ids[i] = seq.ids[i];
    pos[i] = i;
  }
  return add(take_rows(p(t, "text.tok_emb"), ids), take_rows(p(t, "text.pos_emb"), pos));
}

Var Model::embed_nodes_shapes(Tape& t, const ArchGraph& g) {
  const std::size_t m = g.size();
  if (m == 0) throw DataError("graph has no nodes");
  if (m > cfg_.max_nodes) {
    throw DataError("graph with " + std::to_string(m) + " nodes exceeds max_nodes " + std::to_string(cfg_.max_nodes));
  }
  std::vector<std::size_t> ids(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (g.nodes[i] >= node_vocab_.size()) throw DataError("node id " + std::to_string(g.nodes[i]) + " out of vocabulary");
    ids[i] = g.nodes[i];
  }
  auto feats = take_rows(p(t, "arch.node_emb"), ids);
  if (cfg_.no_shape) return feats;
  if (g.shapes.size() != m) throw DataError("graph shape count differs from node count");
  for (int k = 0; k < 4; ++k) {
    std::vector<std::size_t> buckets(m);
    for (std::size_t i = 0; i < m; ++i) buckets[i] = shape_bucket(g.shapes[i][static_cast<std::size_t>(k)], cfg_.shape_buckets);
    feats = add(feats, take_rows(p(t, "arch.shape_emb." + std::to_string(k)), buckets));
  }
  return feats;
}

Var Model::gat_forward(Tape& t, Var features, const std::vector<std::uint8_t>& mask) {
  const std::size_t m = features.rows();
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask.empty() && !mask[i * m + i]) throw DataError("gat_forward: attention mask lacks a self-loop");
  }
  auto h = features;
  for (std::size_t l = 0; l < cfg_.gat_layers; ++l) {
    const auto L = "gat." + std::to_string(l);
    std::vector<Var> heads;
    for (std::size_t k = 0; k < cfg_.gat_heads; ++k) {
      const auto H = L + "." + std::to_string(k);
      const auto wh = matmul(h, p(t, H + ".W"));
      const auto a = p(t, H + ".a");
      const auto src = matmul(wh, transpose(slice_rows(a, 0, 1)));
      const auto dst = matmul(wh, transpose(slice_rows(a, 1, 1)));
      const auto alpha = masked_softmax(leaky_relu(outer_add(src, dst), 0.2), mask);
      heads.push_back(matmul(alpha, wh));
    }
    const auto cat = heads.size() == 1 ? heads.front() : concat_cols(heads);
    h = add(h, linear(t, cat, L + ".proj"));
  }
  return h;
}

Var Model::cross_encode(Tape& t, Var seq, const std::vector<bool>& keep) {
  if (cfg_.no_cross_encoder) return seq;
  const std::size_t k = seq.rows();
  if (keep.size() != k) throw ShapeError("cross_encode: mask length differs from sequence length");
  std::vector<std::uint8_t> mask(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) mask[i * k + j] = keep[j] ? 1 : 0;
  auto x = seq;
  for (std::size_t l = 0; l < cfg_.cross_layers; ++l) {
    const auto L = "cross." + std::to_string(l);
    const auto a = ln(t, x, L + ".ln.1");
    x = add(x, attention(t, a, a, mask, cfg_.cross_heads, L + ".attn"));
    const auto f = ln(t, x, L + ".ln.2");
    x = add(x, linear(t, gelu(linear(t, f, L + ".ffn.fc1")), L + ".ffn.fc2"));
  }
  return x;
}

Var Model::pool(Tape&, Var H, const std::vector<bool>& keep) { return masked_mean_rows(H, keep); }

Var Model::mam_logits(Tape& t, Var H_g) { return linear(t, H_g, "head.mam.proj"); }

Var Model::aqa_logits(Tape& t, Var J_t, Var J_g) {
  return linear(t, gelu(linear(t, mul(J_t, J_g), "head.aqa.fc1")), "head.aqa.fc2");
}

Var Model::decoder_logits(Tape& t, Var H_g, const std::vector<TokenId>& inputs) {
  const std::size_t n = inputs.size();
  if (n == 0) throw DataError("decoder input is empty");
  if (n > cfg_.max_tokens) throw DataError("decoder input exceeds max_tokens");
  std::vector<std::size_t> ids(n), pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (inputs[i] >= text_vocab_.size()) throw DataError("decoder token id out of vocabulary");
    ids[i] = inputs[i];
    pos[i] = i;
  }
  auto x = add(take_rows(p(t, "dec.tok_emb"), ids), take_rows(p(t, "dec.pos_emb"), pos));
  std::vector<std::uint8_t> causal(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) causal[i * n + j] = 1;
  for (std::size_t l = 0; l < cfg_.decoder_layers; ++l) {
    const auto P = dec_prefix(l);
    const auto a = ln(t, x, P + "ln.1");
    x = add(x, attention(t, a, a, causal, cfg_.decoder_heads, P + "attn"));
    const auto c = ln(t, x, P + "ln.2");
    x = add(x, attention(t, c, H_g, {}, cfg_.decoder_heads, P + "xattn"));
    const auto f = ln(t, x, P + "ln.3");
    x = add(x, linear(t, gelu(linear(t, f, P + "ffn.fc1")), P + "ffn.fc2"));
  }
  const auto y = ln(t, x, "dec.ln.f");
  return linear(t, gelu(linear(t, y, "dec.out.fc1")), "dec.out.fc2");
}

Encoded Model::encode_text(Tape& t, const TokenSeq& seq) {
  const auto M = embed_text(t, seq);
  // Padding is a suffix and is masked out of every attention row, so the
  // real prefix alone yields the same outputs at lower cost.
  const std::size_t n = seq.real_length();
  if (n == 0) throw DataError("token sequence has no real tokens");
  const std::vector<bool> keep(n, true);
  const auto H = cross_encode(t, n == M.rows() ? M : slice_rows(M, 0, n), keep);
  return {H, pool(t, H, keep), keep};
}

Encoded Model::encode_graph(Tape& t, const ArchGraph& g) {
  if (cfg_.text_only) return encode_text(t, graph_summary_text(g, node_vocab_));
  const auto feats = embed_nodes_shapes(t, g);
  const auto M = gat_forward(t, feats, attention_mask(g, !cfg_.no_edge));
  const std::vector<bool> keep(g.size(), true);
  const auto H = cross_encode(t, M, keep);
  return {H, pool(t, H, keep), keep};
}

std::vector<double> Model::text_embedding(const std::string& text) {
  Tape t(false);
  return encode_text(t, text).J.value().data();
}

std::vector<double> Model::graph_embedding(const ArchGraph& g) {
  Tape t(false);
  return encode_graph(t, g).J.value().data();
}

double Model::score(const std::string& text, const ArchGraph& g) {
  Tape t(false);
  const auto jt = encode_text(t, text).J;
  const auto jg = encode_graph(t, g).J;
  return cosine(jt, jg, cfg_.cos_eps).item();
}

std::vector<double> Model::answer_probabilities(const ArchGraph& g, const std::string& question) {
  Tape t(false);
  const auto jt = encode_text(t, question).J;
  const auto jg = encode_graph(t, g).J;
  return sigmoid(aqa_logits(t, jt, jg)).value().data();
}

std::vector<TokenId> Model::decode_beam(const ArchGraph& g, std::size_t beam, std::size_t max_len) {
  if (max_len > cfg_.max_tokens) throw DataError("decode max_len exceeds max_tokens");
  Tape enc(false);
  const auto H = encode_graph(enc, g).H;
  const Tensor H_value = H.value();
  BeamConfig bc;
  bc.beam = beam;
  bc.max_len = max_len;
  bc.vocab_size = text_vocab_.size();
  const auto next = [&](const std::vector<TokenId>& prefix) {
    Tape t(false);
    const auto logits = decoder_logits(t, t.constant(H_value), prefix);
    const auto lp = log_softmax(slice_rows(logits, prefix.size() - 1, 1));
    return lp.value().data();
  };
  return beam_search(next, bc).tokens;
}

std::string Model::caption(const ArchGraph& g, std::size_t beam, std::size_t max_len) {
  return detokenize(decode_beam(g, beam, max_len), text_vocab_);
}

}  // namespace archbert
