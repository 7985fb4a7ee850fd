#include "archbert/config.hpp"

#include <cmath>
#include <sstream>

#include "archbert/catalog.hpp"
#include "archbert/error.hpp"
#include "archbert/numerics/checkpoint.hpp"

namespace archbert {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t as_size(const std::string& key, const std::string& v) {
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

double as_double(const std::string& key, const std::string& v) {
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

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys(const std::string& section) {
  static const std::vector<std::string> gen = {
      "rng_seed",          "op_vocab",          "op_count",           "min_nodes",
      "max_nodes",         "num_archs",         "num_val_archs",      "min_descriptions",
      "max_descriptions",  "positive_fraction", "questions_per_arch", "answer_catalog_size",
      "beta",              "skip_edge_prob",    "acd_pairs",          "acd_positive_fraction",
      "families",          "family_size",       "mined_negative_fraction"};
  static const std::vector<std::string> train = {"lr",         "batch_size", "epochs",    "seed",
                                                 "task",       "alpha",      "mask_ratio", "eval_every",
                                                 "checkpoint"};
  if (section == "gen") return gen;
  if (section == "model") return ModelConfig::keys();
  if (section == "train") return train;
  throw DataError("unknown config section '" + section + "'");
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& v) {
  if (section == "model") {
    model.set(key, v);
    return;
  }
  if (section == "gen") {
    if (key == "rng_seed") gen.rng_seed = as_size(key, v);
    else if (key == "op_vocab") gen.op_vocab = split_list(v);
    else if (key == "op_count") {
      const auto n = as_size(key, v);
      if (n < 1 || n > op_catalog().size()) throw DataError("config key 'op_count' must lie in [1, 85]");
      gen.op_vocab = default_op_names(n);
    }
    else if (key == "min_nodes") gen.min_nodes = static_cast<std::uint32_t>(as_size(key, v));
    else if (key == "max_nodes") gen.max_nodes = static_cast<std::uint32_t>(as_size(key, v));
    else if (key == "num_archs") gen.num_archs = as_size(key, v);
    else if (key == "num_val_archs") gen.num_val_archs = as_size(key, v);
    else if (key == "min_descriptions") gen.min_descriptions = as_size(key, v);
    else if (key == "max_descriptions") gen.max_descriptions = as_size(key, v);
    else if (key == "positive_fraction") gen.positive_fraction = as_double(key, v);
    else if (key == "questions_per_arch") gen.questions_per_arch = as_size(key, v);
    else if (key == "answer_catalog_size") gen.answer_catalog_size = as_size(key, v);
    else if (key == "beta") gen.beta = as_double(key, v);
    else if (key == "skip_edge_prob") gen.skip_edge_prob = as_double(key, v);
    else if (key == "acd_pairs") gen.acd_pairs = as_size(key, v);
    else if (key == "acd_positive_fraction") gen.acd_positive_fraction = as_double(key, v);
    else if (key == "families") gen.families = as_size(key, v);
    else if (key == "family_size") gen.family_size = as_size(key, v);
    else if (key == "mined_negative_fraction") gen.mined_negative_fraction = as_double(key, v);
    else throw DataError("unknown gen config key '" + key + "'");
    return;
  }
  if (section == "train") {
    if (key == "lr") train.lr = as_double(key, v);
    else if (key == "batch_size") train.batch_size = as_size(key, v);
    else if (key == "epochs") train.epochs = as_size(key, v);
    else if (key == "seed") train.seed = as_size(key, v);
    else if (key == "task") train.task = parse_train_task(v);
    else if (key == "alpha") train.alpha = as_double(key, v);
    else if (key == "mask_ratio") train.mask_ratio = as_double(key, v);
    else if (key == "eval_every") train.eval_every = as_size(key, v);
    else if (key == "checkpoint") train.checkpoint = v;
    else throw DataError("unknown train config key '" + key + "'");
    return;
  }
  throw DataError("unknown config section '" + section + "'");
}

std::string RunConfig::get(const std::string& section, const std::string& key) const {
  if (section == "model") return model.get(key);
  if (section == "gen") {
    if (key == "rng_seed") return std::to_string(gen.rng_seed);
    if (key == "op_vocab") return join(gen.op_vocab);
    if (key == "op_count") return std::to_string(gen.op_vocab.size());
    if (key == "min_nodes") return std::to_string(gen.min_nodes);
    if (key == "max_nodes") return std::to_string(gen.max_nodes);
    if (key == "num_archs") return std::to_string(gen.num_archs);
    if (key == "num_val_archs") return std::to_string(gen.num_val_archs);
    if (key == "min_descriptions") return std::to_string(gen.min_descriptions);
    if (key == "max_descriptions") return std::to_string(gen.max_descriptions);
    if (key == "positive_fraction") return num(gen.positive_fraction);
    if (key == "questions_per_arch") return std::to_string(gen.questions_per_arch);
    if (key == "answer_catalog_size") return std::to_string(gen.answer_catalog_size);
    if (key == "beta") return num(gen.beta);
    if (key == "skip_edge_prob") return num(gen.skip_edge_prob);
    if (key == "acd_pairs") return std::to_string(gen.acd_pairs);
    if (key == "acd_positive_fraction") return num(gen.acd_positive_fraction);
    if (key == "families") return std::to_string(gen.families);
    if (key == "family_size") return std::to_string(gen.family_size);
    if (key == "mined_negative_fraction") return num(gen.mined_negative_fraction);
  }
  if (section == "train") {
    if (key == "lr") return num(train.lr);
    if (key == "batch_size") return std::to_string(train.batch_size);
    if (key == "epochs") return std::to_string(train.epochs);
    if (key == "seed") return std::to_string(train.seed);
    if (key == "task") return std::string(train_task_name(train.task));
    if (key == "alpha") return num(train.alpha);
    if (key == "mask_ratio") return num(train.mask_ratio);
    if (key == "eval_every") return std::to_string(train.eval_every);
    if (key == "checkpoint") return train.checkpoint;
  }
  throw DataError("unknown config key '" + section + "." + key + "'");
}

void RunConfig::validate() const {
  gen.validate();
  model.validate();
  train.validate();
}

void RunConfig::set_seed(std::uint64_t seed) {
  gen.rng_seed = seed;
  model.init_seed = seed;
  train.seed = seed;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("config: unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "gen" && section != "model" && section != "train") {
        throw ParseError("config: unknown section '" + section + "'", lineno, section);
      }
      continue;
    }
    if (section.empty()) throw ParseError("config: key outside any section", lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key = value", lineno);
    const auto key = trim(line.substr(0, eq));
    try {
      cfg.set(section, key, trim(line.substr(eq + 1)));
    } catch (const DataError& e) {
      throw ParseError(std::string("config: ") + e.what(), lineno, key);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) { return parse(read_file_bytes(path)); }

std::string RunConfig::serialize() const {
  std::string out;
  for (const char* section : {"gen", "model", "train"}) {
    out += std::string("[") + section + "]\n";
    for (const auto& k : keys(section)) {
      if (std::string(section) == "gen" && k == "op_count") continue;
      out += k + " = " + get(section, k) + "\n";
    }
  }
  return out;
}

}  // namespace archbert
