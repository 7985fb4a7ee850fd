#include "archbert/search_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <openssl/evp.h>

#include "archbert/error.hpp"
#include "archbert/numerics/checkpoint.hpp"

namespace archbert {

Fingerprint sha256(const std::string& bytes) {
  Fingerprint out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(const Fingerprint& f) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : f) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

Fingerprint model_fingerprint(const Model& model) { return sha256(checkpoint_bytes(model.params())); }

EmbeddingIndex::EmbeddingIndex(std::size_t d, Fingerprint fingerprint) : d_(d), fingerprint_(fingerprint) {}

void EmbeddingIndex::add(const std::string& id, const std::vector<double>& vec) {
  if (vec.size() != d_) throw DataError("index entry '" + id + "' has the wrong dimension");
  for (const auto& e : entries_) {
    if (e.id == id) throw DataError("duplicate index id '" + id + "'");
  }
  double n2 = 0.0;
  for (double x : vec) n2 += x * x;
  IndexEntry e{id, vec, n2 == 0.0};
  if (!e.zero) {
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : e.vec) x *= inv;
  }
  entries_.push_back(std::move(e));
}

std::vector<SearchHit> EmbeddingIndex::search_vector(const std::vector<double>& query, std::size_t k) const {
  if (query.size() != d_) throw DataError("query dimension differs from the index");
  double qn = 0.0;
  for (double x : query) qn += x * x;
  qn = std::sqrt(qn);
  std::vector<SearchHit> hits;
  hits.reserve(entries_.size());
  for (const auto& e : entries_) {
    double dot = 0.0;
    for (std::size_t i = 0; i < d_; ++i) dot += e.vec[i] * query[i];
    hits.push_back({e.id, (e.zero || qn == 0.0) ? 0.0 : dot / qn});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > s.size()) throw ParseError("index: truncated at byte " + std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, s.data() + pos, 4);
    pos += 4;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, s.data() + pos, 4);
    pos += 4;
    return v;
  }
};

}  // namespace

std::string EmbeddingIndex::to_bytes() const {
  std::string out = "ABIX";
  put_u32(out, kIndexVersion);
  put_u32(out, static_cast<std::uint32_t>(d_));
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  out.append(reinterpret_cast<const char*>(fingerprint_.data()), fingerprint_.size());
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.id.size()));
    out += e.id;
    for (double x : e.vec) {
      const float f = static_cast<float>(x);
      char b[4];
      std::memcpy(b, &f, 4);
      out.append(b, 4);
    }
  }
  return out;
}

EmbeddingIndex EmbeddingIndex::from_bytes(const std::string& bytes) {
  Reader r{bytes};
  r.need(4);
  if (bytes.compare(0, 4, "ABIX") != 0) throw ParseError("index: bad magic");
  r.pos = 4;
  const auto version = r.u32();
  if (version != kIndexVersion) throw ParseError("index: unsupported version " + std::to_string(version));
  const auto d = r.u32();
  const auto count = r.u32();
  Fingerprint fp{};
  r.need(fp.size());
  std::memcpy(fp.data(), bytes.data() + r.pos, fp.size());
  r.pos += fp.size();
  EmbeddingIndex index(d, fp);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto n = r.u32();
    r.need(n);
    const auto id = bytes.substr(r.pos, n);
    r.pos += n;
    std::vector<double> v(d);
    bool zero = true;
    for (auto& x : v) {
      x = r.f32();
      if (!std::isfinite(x)) throw ParseError("index: non-finite value for '" + id + "'");
      zero = zero && x == 0.0;
    }
    for (const auto& e : index.entries_) {
      if (e.id == id) throw ParseError("index: duplicate id '" + id + "'");
    }
    if (!zero) {
      // f32 storage leaves the norm off by ~1e-7; restore it in double.
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      const double inv = 1.0 / std::sqrt(n2);
      for (auto& x : v) x *= inv;
    }
    index.entries_.push_back({id, std::move(v), zero});
  }
  if (r.pos != bytes.size()) throw ParseError("index: trailing bytes");
  return index;
}

void EmbeddingIndex::save(const std::string& path) const { write_file_bytes(path, to_bytes()); }

EmbeddingIndex EmbeddingIndex::load(const std::string& path) { return from_bytes(read_file_bytes(path)); }

EmbeddingIndex build_index(Model& model, const std::vector<std::pair<std::string, ArchGraph>>& graphs) {
  EmbeddingIndex index(model.config().d, model_fingerprint(model));
  for (const auto& [id, g] : graphs) {
    const auto report = validate_graph(g, &model.node_vocab());
    if (!report.ok) throw GraphValidationError(report);
    index.add(id, model.graph_embedding(g));
  }
  return index;
}

std::vector<SearchHit> search(const EmbeddingIndex& index, const std::string& query, Model& model, std::size_t k) {
  if (index.fingerprint() != model_fingerprint(model)) {
    throw DataError("index fingerprint " + to_hex(index.fingerprint()) + " does not match the loaded checkpoint " +
                    to_hex(model_fingerprint(model)));
  }
  if (k == 0) return {};
  return index.search_vector(model.text_embedding(query), k);
}

}  // namespace archbert
