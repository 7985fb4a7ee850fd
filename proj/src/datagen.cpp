#include "archbert/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "archbert/catalog.hpp"
#include "archbert/error.hpp"
#include "archbert/textkit.hpp"

namespace archbert {

std::vector<std::string> GenConfig::default_op_vocab() { return default_op_names(kDefaultOpCount); }

void GenConfig::validate() const {
  if (min_nodes < 1) throw DataError("GenConfig: min_nodes must be at least 1");
  if (min_nodes > max_nodes) throw DataError("GenConfig: min_nodes exceeds max_nodes");
  if (op_vocab.empty()) throw DataError("GenConfig: op_vocab is empty");
  std::unordered_set<std::string> seen;
  for (const auto& op : op_vocab) {
    if (!find_op_info(op)) throw DataError("GenConfig: op '" + op + "' is not in the catalog");
    if (!seen.insert(op).second) throw DataError("GenConfig: duplicate op '" + op + "'");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw DataError("GenConfig: beta must lie in (0, 1)");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
    throw DataError("GenConfig: positive_fraction must lie in (0, 1)");
  }
  if (min_descriptions < 2 || min_descriptions > max_descriptions) {
    throw DataError("GenConfig: need 2 <= min_descriptions <= max_descriptions");
  }
  if (questions_per_arch != 35) throw DataError("GenConfig: the question template set has exactly 35 entries");
  if (answer_catalog_size != kAnswerCount) throw DataError("GenConfig: the answer catalog has exactly 51 entries");
  if (!(skip_edge_prob >= 0.0 && skip_edge_prob <= 1.0)) throw DataError("GenConfig: skip_edge_prob outside [0, 1]");
  if (!(acd_positive_fraction >= 0.0 && acd_positive_fraction <= 1.0)) {
    throw DataError("GenConfig: acd_positive_fraction outside [0, 1]");
  }
  if (!(mined_negative_fraction >= 0.0 && mined_negative_fraction < 1.0)) {
    throw DataError("GenConfig: mined_negative_fraction outside [0, 1)");
  }
}

std::set<std::string> extract_present_ops(const ArchGraph& g, const NodeVocab& vocab) {
  std::set<std::string> ops;
  for (auto id : g.nodes) ops.insert(vocab.name(id));
  return ops;
}

std::set<std::string> mentioned_ops(const std::string& text) {
  std::set<std::string> ops;
  for (const auto& w : normalize_words(text)) {
    if (find_op_info(w)) ops.insert(w);
  }
  return ops;
}

namespace {

const std::vector<std::uint32_t> kChannels = {8, 16, 32, 64, 128, 256};
const std::vector<std::uint32_t> kKernels = {1, 3, 5, 7};

bool is_1d(const std::string& name) { return name == "conv1d" || name == "convtranspose1d"; }

ParamShape random_shape(const OpInfo& op, Rng& rng) {
  if (!op.has_params) return kNoParams;
  const auto out = rng.pick(kChannels);
  const auto in = rng.pick(kChannels);
  switch (op.category) {
    case OpCategory::Convolution: {
      const auto k = rng.pick(kKernels);
      return is_1d(op.name) ? ParamShape{out, in, 1, k} : ParamShape{out, in, k, k};
    }
    case OpCategory::Linear:
      return {out, in, 1, 1};
    default:
      return {out, 0, 0, 0};
  }
}

std::uint64_t param_count(const ParamShape& s) {
  if (s == kNoParams) return 0;
  std::uint64_t n = 1;
  for (auto d : s) {
    if (d) n *= d;
  }
  return n;
}

const std::vector<std::string> kOpeners = {"This architecture contains", "This neural network has",
                                           "This classification neural network includes", "This model is built with",
                                           "The network uses"};
const std::vector<std::string> kConnectors = {"It also has", "Another part of this neural network is",
                                              "Additionally, this architecture contains"};

std::string mention(const std::string& op) {
  const auto& info = op_info(op);
  return info.phrase + " (" + info.display + ")";
}

// Picks up to `n` distinct entries.
std::vector<std::string> pick_distinct(const std::vector<std::string>& pool, std::size_t n, Rng& rng) {
  auto copy = pool;
  rng.shuffle(copy);
  copy.resize(std::min(n, copy.size()));
  return copy;
}

std::string sentence_pair(const std::vector<std::string>& ops, Rng& rng) {
  std::string text = rng.pick(kOpeners) + " " + mention(ops[0]) + ".";
  if (ops.size() > 1) text += " " + rng.pick(kConnectors) + " " + mention(ops[1]) + ".";
  return text;
}

std::string sentence_params(const ArchGraph& g, const std::string& op, Rng& rng) {
  std::uint64_t total = 0;
  for (const auto& s : g.shapes) total += param_count(s);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(total) / 1e6);
  std::string text = rng.pick(kOpeners) + " " + mention(op) + ".";
  if (total == 0) return text + " This neural architecture has no learnable parameters.";
  return text + " This neural architecture has about " + buf + " million parameters.";
}

std::string sentence_totals(const ArchGraph& g, const NodeVocab& vocab) {
  std::map<std::string, std::size_t> counts;
  for (auto id : g.nodes) ++counts[vocab.name(id)];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string text = "In total, this neural network architecture has " + std::to_string(g.size()) +
                     " layers, and it has ";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i > 0) text += (i + 1 == ranked.size()) ? (ranked.size() > 2 ? ", and " : " and ") : ", ";
    text += std::to_string(ranked[i].second) + " " + op_info(ranked[i].first).display;
  }
  return text + (ranked.size() == 1 && ranked[0].second == 1 ? " layer." : " layers.");
}

}  // namespace

ArchGraph gen_architecture(const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& vocab = NodeVocab::catalog();
  ArchGraph g;
  const auto m = static_cast<std::uint32_t>(rng.uniform_int(cfg.min_nodes, cfg.max_nodes));
  g.nodes.reserve(m);
  g.shapes.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const auto& op = op_info(rng.pick(cfg.op_vocab));
    g.nodes.push_back(vocab.id(op.name));
    g.shapes.push_back(random_shape(op, rng));
  }
  for (std::uint32_t i = 1; i < m; ++i) {
    g.edges.emplace_back(i - 1, i);
    if (i >= 2 && rng.bernoulli(cfg.skip_edge_prob)) {
      g.edges.emplace_back(static_cast<std::uint32_t>(rng.uniform_int(0, i - 2)), i);
    }
  }
  g.canonicalize();
  return g;
}

std::vector<BiModalSample> gen_descriptions(const ArchGraph& g, const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& vocab = NodeVocab::catalog();
  const auto present_set = extract_present_ops(g, vocab);
  const std::vector<std::string> present(present_set.begin(), present_set.end());
  std::vector<std::string> absent;
  for (const auto& op : cfg.op_vocab) {
    if (!present_set.count(op)) absent.push_back(op);
  }
  if (absent.empty()) {
    throw DataError("gen_descriptions: every op of the generation vocabulary occurs in the graph, "
                    "no absent op is left for negative descriptions");
  }
  const auto n = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.min_descriptions), static_cast<std::int64_t>(cfg.max_descriptions)));
  auto n_pos = static_cast<std::size_t>(std::lround(cfg.positive_fraction * static_cast<double>(n)));
  n_pos = std::clamp<std::size_t>(n_pos, 1, n - 1);

  std::vector<BiModalSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n_pos; ++k) {
    std::string text;
    switch (k % 3) {
      case 0: text = sentence_pair(pick_distinct(present, 2, rng), rng); break;
      case 1: text = sentence_params(g, rng.pick(present), rng); break;
      default: text = sentence_totals(g, vocab); break;
    }
    out.push_back({g, std::move(text), 1.0});
  }
  for (std::size_t k = n_pos; k < n; ++k) {
    const auto ops = pick_distinct(absent, rng.bernoulli(0.5) ? 2 : 1, rng);
    out.push_back({g, sentence_pair(ops, rng), 0.0});
  }
  return out;
}

namespace {

struct QuestionSpec {
  std::vector<std::string> phrasings;
  std::function<std::vector<std::string>(const std::set<std::string>&, const ArchGraph&)> answer;
};

std::vector<std::string> category_answers(OpCategory c, const std::set<std::string>& present) {
  std::vector<std::string> out;
  const auto answers = answer_catalog();
  for (const auto& op : present) {
    const auto& info = op_info(op);
    if (info.category != c) continue;
    if (std::find(answers.begin(), answers.end(), info.display) != answers.end()) out.push_back(info.display);
  }
  if (out.empty()) out.emplace_back("none");
  return out;
}

std::set<std::uint32_t> square_kernels(const ArchGraph& g) {
  std::set<std::uint32_t> ks;
  const auto& vocab = NodeVocab::catalog();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& info = op_info(vocab.name(g.nodes[i]));
    const auto& s = g.shapes[i];
    if (info.category != OpCategory::Convolution || s[2] != s[3]) continue;
    if (std::find(kKernels.begin(), kKernels.end(), s[2]) != kKernels.end()) ks.insert(s[2]);
  }
  return ks;
}

std::string kernel_answer(std::uint32_t k) { return std::to_string(k) + "*" + std::to_string(k); }

const std::vector<QuestionSpec>& question_specs() {
  static const std::vector<QuestionSpec> specs = [] {
    std::vector<QuestionSpec> qs;
    auto cat = [](OpCategory c) {
      return [c](const std::set<std::string>& present, const ArchGraph&) { return category_answers(c, present); };
    };
    qs.push_back({{"what type of pooling module has been used in this neural architecture?",
                   "which pooling layers does this network use?"},
                  cat(OpCategory::Pooling)});
    qs.push_back({{"what type of activation layer has been used in this neural network model?",
                   "which activation functions appear in this architecture?"},
                  cat(OpCategory::Activation)});
    qs.push_back({{"what type of normalization layer is used in this neural network architecture?",
                   "which normalization modules does this model contain?"},
                  cat(OpCategory::Normalization)});
    qs.push_back({{"what kind of convolution layers are included in this network?",
                   "which convolution types does this neural architecture use?"},
                  cat(OpCategory::Convolution)});
    qs.push_back({{"in general what kernel sizes are used in this neural network model?",
                   "overall which kernel sizes appear in this network?"},
                  [](const std::set<std::string>&, const ArchGraph& g) {
                    std::vector<std::string> out;
                    for (auto k : square_kernels(g)) out.push_back(kernel_answer(k));
                    if (out.empty()) out.emplace_back("none");
                    return out;
                  }});
    qs.push_back({{"what is the largest kernel size used in this network?",
                   "which kernel size is the biggest in this neural architecture?"},
                  [](const std::set<std::string>&, const ArchGraph& g) {
                    auto ks = square_kernels(g);
                    return ks.empty() ? std::vector<std::string>{"none"}
                                      : std::vector<std::string>{kernel_answer(*ks.rbegin())};
                  }});
    for (const auto& op : probed_ops()) {
      const auto& info = op_info(op);
      qs.push_back({{"what does the " + info.short_name + " module do in this network?",
                     "what is the role of the " + info.short_name + " module in this neural architecture?"},
                    [op](const std::set<std::string>& present, const ArchGraph&) {
                      const auto& i = op_info(op);
                      return std::vector<std::string>{present.count(op) ? *i.function
                                                                        : "this model does not include " + i.display};
                    }});
    }
    for (const auto& op : presence_ops()) {
      const auto& info = op_info(op);
      const std::string article = std::string_view("AEIOU").find(info.display.front()) != std::string_view::npos ? "an " : "a ";
      qs.push_back({{"does this network include " + article + info.display + " layer?",
                     "is there any " + info.short_name + " module in this neural architecture?"},
                    [op](const std::set<std::string>& present, const ArchGraph&) {
                      return std::vector<std::string>{present.count(op) ? "yes" : "no"};
                    }});
    }
    return qs;
  }();
  return specs;
}

}  // namespace

std::vector<AQASample> gen_qa(const ArchGraph& g, const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto present = extract_present_ops(g);
  const auto& specs = question_specs();
  std::vector<AQASample> out;
  out.reserve(specs.size());
  for (const auto& q : specs) {
    AQASample s;
    s.graph = g;
    s.question = rng.pick(q.phrasings);
    for (const auto& a : q.answer(present, g)) s.answers.push_back(static_cast<std::uint32_t>(answer_id(a)));
    std::sort(s.answers.begin(), s.answers.end());
    s.answers.erase(std::unique(s.answers.begin(), s.answers.end()), s.answers.end());
    out.push_back(std::move(s));
  }
  return out;
}

double token_overlap_similarity(const std::string& a, const std::string& b) {
  const auto wa = normalize_words(a);
  const auto wb = normalize_words(b);
  const std::set<std::string> sa(wa.begin(), wa.end());
  const std::set<std::string> sb(wb.begin(), wb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::map<std::string, std::vector<std::string>> mine_negatives(
    const std::map<std::string, std::vector<std::string>>& positives, const SimilarityFn& sim, double beta) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [arch, own] : positives) {
    const std::set<std::string> own_set(own.begin(), own.end());
    std::set<std::string> admitted;
    for (const auto& [other, descriptions] : positives) {
      if (other == arch) continue;
      for (const auto& text : descriptions) {
        if (own_set.count(text) || admitted.count(text)) continue;
        double best = 0.0;
        for (const auto& p : own_set) best = std::max(best, sim(text, p));
        if (best <= beta) admitted.insert(text);
      }
    }
    out[arch] = std::vector<std::string>(admitted.begin(), admitted.end());
  }
  return out;
}

std::vector<ACDPair> gen_acd_pairs(const std::vector<TaggedArch>& archs, Rng& rng, double positive_fraction,
                                   std::size_t count) {
  if (archs.size() < 2) throw DataError("gen_acd_pairs: need at least two architectures");
  std::vector<std::pair<std::size_t, std::size_t>> same;
  std::vector<std::pair<std::size_t, std::size_t>> diff;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    for (std::size_t j = i + 1; j < archs.size(); ++j) {
      (archs[i].family == archs[j].family ? same : diff).emplace_back(i, j);
    }
  }
  if (positive_fraction > 0.0 && same.empty()) {
    throw DataError("gen_acd_pairs: positive pairs requested but no family has two members");
  }
  std::vector<ACDPair> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const bool positive = diff.empty() || rng.bernoulli(positive_fraction);
    const auto [i, j] = rng.pick(positive ? same : diff);
    out.push_back({archs[i].graph, archs[j].graph, archs[i].family == archs[j].family ? 1 : 0});
  }
  return out;
}

ArchGraph mutate_architecture(const ArchGraph& base, const GenConfig& cfg, Rng& rng) {
  const auto& vocab = NodeVocab::catalog();
  ArchGraph g = base;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!rng.bernoulli(0.15)) continue;
    const auto& cur = op_info(vocab.name(g.nodes[i]));
    std::vector<std::string> same_category;
    for (const auto& op : cfg.op_vocab) {
      if (op_info(op).category == cur.category) same_category.push_back(op);
    }
    const auto& next = op_info(rng.pick(same_category));
    g.nodes[i] = vocab.id(next.name);
    g.shapes[i] = random_shape(next, rng);
  }
  const auto m = static_cast<std::uint32_t>(g.size());
  if (m >= 3 && rng.bernoulli(0.5)) {
    const auto v = static_cast<std::uint32_t>(rng.uniform_int(2, m - 1));
    g.edges.emplace_back(static_cast<std::uint32_t>(rng.uniform_int(0, v - 2)), v);
  }
  g.canonicalize();
  return g;
}

namespace {

Rng stream(const GenConfig& cfg, std::uint64_t split_offset, std::uint64_t index) {
  return Rng::split(mix_seed(cfg.rng_seed) ^ mix_seed(split_offset), index);
}

// Redraws graphs that use the whole op vocabulary: they leave no absent op
// for negative descriptions.
ArchGraph gen_describable(const GenConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto g = gen_architecture(cfg, rng);
    if (extract_present_ops(g).size() < cfg.op_vocab.size()) return g;
  }
  throw DataError("every generated graph covers the whole op vocabulary; enlarge op_vocab or lower max_nodes");
}

std::string arch_name(const char* prefix, std::uint64_t split_offset, std::size_t i) {
  return std::string(prefix) + (split_offset ? "_val_" : "_") + std::to_string(i);
}

}  // namespace

std::vector<TaggedArch> gen_families(const GenConfig& cfg, Rng& rng) {
  std::vector<TaggedArch> out;
  for (std::size_t f = 0; f < cfg.families; ++f) {
    const std::string tag = "family" + std::to_string(f);
    auto base = gen_describable(cfg, rng);
    for (std::size_t k = 0; k < cfg.family_size; ++k) {
      auto g = k == 0 ? base : mutate_architecture(base, cfg, rng);
      g.name = tag + "_" + std::to_string(k);
      out.push_back({std::move(g), tag});
    }
  }
  return out;
}

std::string graph_summary_text(const ArchGraph& g, const NodeVocab& vocab) {
  std::string out;
  for (auto id : g.nodes) {
    if (!out.empty()) out += ' ';
    out += vocab.name(id);
  }
  return out;
}


std::vector<BiModalSample> gen_autonet(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset) {
  cfg.validate();
  std::vector<BiModalSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream(cfg, split_offset, i);
    auto g = gen_describable(cfg, rng);
    g.name = arch_name("autonet", split_offset, i);
    auto samples = gen_descriptions(g, cfg, rng);
    out.insert(out.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  return out;
}

std::vector<AQASample> gen_autonet_qa(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset) {
  cfg.validate();
  std::vector<AQASample> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream(cfg, split_offset, i);
    auto g = gen_architecture(cfg, rng);
    g.name = arch_name("autonet_qa", split_offset, i);
    auto samples = gen_qa(g, cfg, rng);
    out.insert(out.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  return out;
}

std::vector<ACDPair> gen_acd_dataset(const GenConfig& cfg, std::uint64_t split_offset) {
  cfg.validate();
  auto rng = stream(cfg, split_offset, 0);
  const auto archs = gen_families(cfg, rng);
  return gen_acd_pairs(archs, rng, cfg.acd_positive_fraction, cfg.acd_pairs);
}

std::vector<BACDSample> gen_bacd_dataset(const GenConfig& cfg, std::uint64_t split_offset) {
  cfg.validate();
  auto rng = stream(cfg, split_offset, 0);
  const auto archs = gen_families(cfg, rng);
  std::map<std::string, std::string> family_text;
  for (const auto& a : archs) {
    if (family_text.count(a.family)) continue;
    for (auto& s : gen_descriptions(a.graph, cfg, rng)) {
      if (s.y == 1.0) {
        family_text[a.family] = s.text;
        break;
      }
    }
  }
  std::vector<BACDSample> out;
  for (auto& p : gen_acd_pairs(archs, rng, cfg.acd_positive_fraction, cfg.acd_pairs)) {
    const std::string* text = nullptr;
    for (const auto& a : archs) {
      if (a.graph == p.g1) {
        text = &family_text[a.family];
        break;
      }
    }
    out.push_back({std::move(p.g1), std::move(p.g2), text ? *text : std::string{}, p.label});
  }
  return out;
}

std::vector<BiModalSample> gen_mined(const GenConfig& cfg, std::size_t count, std::uint64_t split_offset) {
  cfg.validate();
  if (count < 2) throw DataError("gen_mined: need at least two architectures");
  std::vector<ArchGraph> graphs;
  std::map<std::string, std::vector<std::string>> positives;
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = stream(cfg, split_offset, i);
    auto g = gen_describable(cfg, rng);
    g.name = arch_name("mined", split_offset, i);
    auto& pos = positives[*g.name];
    for (auto& s : gen_descriptions(g, cfg, rng)) {
      if (s.y == 1.0) pos.push_back(std::move(s.text));
    }
    graphs.push_back(std::move(g));
    rngs.push_back(rng);
  }
  const auto negatives = mine_negatives(positives, token_overlap_similarity, cfg.beta);
  std::size_t total_pos = 0;
  for (const auto& [_, p] : positives) total_pos += p.size();
  const double f = cfg.mined_negative_fraction;
  const auto target_neg = static_cast<std::size_t>(std::lround(static_cast<double>(total_pos) * f / (1.0 - f)));
  std::vector<BiModalSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& g = graphs[i];
    for (const auto& t : positives.at(*g.name)) out.push_back({g, t, 1.0});
    // Spread the negative budget evenly; earlier architectures absorb the remainder.
    const std::size_t quota = target_neg / count + (i < target_neg % count ? 1 : 0);
    auto pool = negatives.at(*g.name);
    rngs[i].shuffle(pool);
    pool.resize(std::min(quota, pool.size()));
    std::sort(pool.begin(), pool.end());
    for (auto& t : pool) out.push_back({g, std::move(t), 0.0});
  }
  return out;
}

}  // namespace archbert
