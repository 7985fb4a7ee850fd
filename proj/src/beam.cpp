#include "archbert/beam.hpp"

#include <algorithm>

#include "archbert/error.hpp"

namespace archbert {

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  const double sa = a.score(), sb = b.score();
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

std::vector<TokenId> allowed_tokens(const BeamConfig& cfg) {
  std::vector<TokenId> out;
  for (TokenId v = 0; v < cfg.vocab_size; ++v) {
    if (std::find(cfg.banned.begin(), cfg.banned.end(), v) == cfg.banned.end()) out.push_back(v);
  }
  return out;
}

void check(const BeamConfig& cfg) {
  if (cfg.beam < 1) throw DataError("beam_search: beam must be at least 1");
  if (cfg.max_len < 1) throw DataError("beam_search: max_len must be at least 1");
  if (cfg.eos >= cfg.vocab_size) throw DataError("beam_search: [EOS] outside the vocabulary");
}

std::vector<double> call(const NextTokenFn& next, TokenId bos, const std::vector<TokenId>& tokens, std::size_t n) {
  std::vector<TokenId> prefix{bos};
  prefix.insert(prefix.end(), tokens.begin(), tokens.end());
  auto lp = next(prefix);
  if (lp.size() != n) throw ShapeError("beam_search: scorer returned the wrong vocabulary size");
  return lp;
}

}  // namespace

Hypothesis beam_search(const NextTokenFn& next, const BeamConfig& cfg) {
  check(cfg);
  const auto allowed = allowed_tokens(cfg);
  std::vector<Hypothesis> beams{Hypothesis{}};
  for (std::size_t step = 0; step < cfg.max_len; ++step) {
    const bool last = step + 1 == cfg.max_len;
    std::vector<Hypothesis> pool;
    for (const auto& h : beams) {
      if (h.done) {
        pool.push_back(h);
        continue;
      }
      const auto lp = call(next, cfg.bos, h.tokens, cfg.vocab_size);
      for (auto v : allowed) {
        if (last && v != cfg.eos) continue;
        Hypothesis e = h;
        e.tokens.push_back(v);
        e.logprob += lp[v];
        e.done = v == cfg.eos;
        pool.push_back(std::move(e));
      }
    }
    std::sort(pool.begin(), pool.end(), better);
    if (pool.size() > cfg.beam) pool.resize(cfg.beam);
    beams = std::move(pool);
    if (std::all_of(beams.begin(), beams.end(), [](const Hypothesis& h) { return h.done; })) break;
  }
  return beams.front();
}

Hypothesis exhaustive_search(const NextTokenFn& next, const BeamConfig& cfg) {
  check(cfg);
  const auto allowed = allowed_tokens(cfg);
  Hypothesis best;
  bool have = false;
  std::vector<Hypothesis> frontier{Hypothesis{}};
  for (std::size_t step = 0; step < cfg.max_len && !frontier.empty(); ++step) {
    const bool last = step + 1 == cfg.max_len;
    std::vector<Hypothesis> grown;
    for (const auto& h : frontier) {
      const auto lp = call(next, cfg.bos, h.tokens, cfg.vocab_size);
      for (auto v : allowed) {
        if (last && v != cfg.eos) continue;
        Hypothesis e = h;
        e.tokens.push_back(v);
        e.logprob += lp[v];
        if (v == cfg.eos) {
          e.done = true;
          if (!have || better(e, best)) best = e;
          have = true;
        } else {
          grown.push_back(std::move(e));
        }
      }
    }
    frontier = std::move(grown);
  }
  return best;
}

}  // namespace archbert
