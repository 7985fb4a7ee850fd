#include "archbert/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "archbert/error.hpp"
#include "archbert/rng.hpp"
#include "archbert/textkit.hpp"

namespace archbert {

namespace {

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

double fmeasure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

ClsMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  ClsMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = fmeasure(m.precision, m.recall);
  return m;
}

ClsMetrics accuracy_f1(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw DataError("accuracy_f1: prediction and label counts differ");
  if (preds.empty()) throw DataError("accuracy_f1: no samples");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0, l = labels[i] != 0;
    tp += p && l;
    fp += p && !l;
    tn += !p && !l;
    fn += !p && l;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

namespace {

using Words = std::vector<std::string>;

std::map<Words, std::size_t> ngrams(const Words& w, std::size_t n) {
  std::map<Words, std::size_t> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) ++out[Words(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

double rouge_n(const Words& cand, const Words& ref, std::size_t n) {
  const auto c = ngrams(cand, n);
  const auto r = ngrams(ref, n);
  std::size_t overlap = 0, nc = 0, nr = 0;
  for (const auto& [g, k] : c) {
    nc += k;
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [_, k] : r) nr += k;
  return fmeasure(ratio(overlap, nc), ratio(overlap, nr));
}

std::vector<Words> sentences(const std::string& text) {
  std::vector<Words> out;
  std::string cur;
  auto flush = [&] {
    auto w = normalize_words(cur);
    if (!w.empty()) out.push_back(std::move(w));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '\n' || ch == '.') flush();
    else cur += ch;
  }
  flush();
  return out;
}

// Indices into `ref` of one LCS with `can`, recovered right to left.
std::vector<std::size_t> lcs_indices(const Words& ref, const Words& can) {
  const std::size_t n = ref.size(), m = can.size();
  std::vector<std::vector<std::size_t>> t(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      t[i][j] = ref[i - 1] == can[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  std::vector<std::size_t> out;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (ref[i - 1] == can[j - 1]) {
      out.push_back(i - 1);
      --i;
      --j;
    } else if (t[i][j - 1] > t[i - 1][j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

double rouge_lsum(const std::vector<Words>& cand, const std::vector<Words>& ref) {
  std::size_t m = 0, n = 0;
  std::map<std::string, std::size_t> cnt_r, cnt_c;
  for (const auto& s : ref) {
    m += s.size();
    for (const auto& w : s) ++cnt_r[w];
  }
  for (const auto& s : cand) {
    n += s.size();
    for (const auto& w : s) ++cnt_c[w];
  }
  if (m == 0 || n == 0) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : ref) {
    std::vector<std::size_t> uni;
    for (const auto& c : cand) {
      const auto idx = lcs_indices(r, c);
      uni.insert(uni.end(), idx.begin(), idx.end());
    }
    std::sort(uni.begin(), uni.end());
    uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
    for (auto i : uni) {
      const auto& w = r[i];
      if (cnt_c[w] > 0 && cnt_r[w] > 0) {
        ++hits;
        --cnt_c[w];
        --cnt_r[w];
      }
    }
  }
  return fmeasure(ratio(hits, n), ratio(hits, m));
}

}  // namespace

RougeScores rouge_scores(const std::string& candidate, const std::string& reference) {
  const auto c = normalize_words(candidate);
  const auto r = normalize_words(reference);
  return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_lsum(sentences(candidate), sentences(reference))};
}

namespace {

// (sum of min counts, sum of max counts).
template <typename K>
std::pair<std::size_t, std::size_t> multiset_iou(const std::map<K, std::size_t>& a, const std::map<K, std::size_t>& b) {
  std::size_t mn = 0, mx = 0;
  for (const auto& [k, ca] : a) {
    auto it = b.find(k);
    const std::size_t cb = it == b.end() ? 0 : it->second;
    mn += std::min(ca, cb);
    mx += std::max(ca, cb);
  }
  for (const auto& [k, cb] : b) {
    if (!a.count(k)) mx += cb;
  }
  return {mn, mx};
}

}  // namespace

double jaccard_similarity(const ArchGraph& a, const ArchGraph& b, const NodeVocab& vocab) {
  auto nodes = [&](const ArchGraph& g) {
    std::map<std::string, std::size_t> out;
    for (auto id : g.nodes) ++out[vocab.name(id)];
    return out;
  };
  auto edges = [&](const ArchGraph& g) {
    std::map<std::pair<std::string, std::string>, std::size_t> out;
    auto c = g;
    c.canonicalize();
    for (const auto& [u, v] : c.edges) ++out[{vocab.name(g.nodes[u]), vocab.name(g.nodes[v])}];
    return out;
  };
  const auto [n_min, n_max] = multiset_iou(nodes(a), nodes(b));
  const auto ea = edges(a);
  const auto eb = edges(b);
  if (ea.empty() && eb.empty()) return ratio(n_min, n_max);
  // One division of the exact mean, so 5/12 comes out as the double nearest 5/12.
  const auto [e_min, e_max] = multiset_iou(ea, eb);
  return ratio(n_min * e_max + e_min * n_max, 2 * n_max * e_max);
}

bool ar_name_baseline(const std::string& arch_name, const std::string& statement) {
  if (arch_name.empty()) throw DataError("ar_name_baseline: empty architecture name");
  auto lower = [](std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  };
  return lower(statement).find(lower(arch_name)) != std::string::npos;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::max(std::sqrt(na) * std::sqrt(nb), eps);
}

ClsMetrics run_ar(Model& model, const std::vector<BiModalSample>& samples, double tau) {
  if (samples.empty()) throw DataError("run_ar: empty evaluation set");
  std::vector<int> preds, labels;
  for (const auto& s : samples) {
    preds.push_back(model.score(s.text, s.graph) > tau);
    labels.push_back(s.y > 0.5);
  }
  return accuracy_f1(preds, labels);
}

ClsMetrics run_acd(Model& model, const std::vector<ACDPair>& pairs, double tau) {
  if (pairs.empty()) throw DataError("run_acd: empty evaluation set");
  const double eps = model.config().cos_eps;
  std::vector<int> preds, labels;
  for (const auto& p : pairs) {
    preds.push_back(cosine_similarity(model.graph_embedding(p.g1), model.graph_embedding(p.g2), eps) > tau);
    labels.push_back(p.label);
  }
  return accuracy_f1(preds, labels);
}

double bacd_score(const std::vector<double>& g1, const std::vector<double>& g2, const std::vector<double>& t,
                  double cos_eps) {
  return (cosine_similarity(g1, g2, cos_eps) + cosine_similarity(g1, t, cos_eps) + cosine_similarity(g2, t, cos_eps)) /
         3.0;
}

ClsMetrics run_bacd(Model& model, const std::vector<BACDSample>& samples, double tau) {
  if (samples.empty()) throw DataError("run_bacd: empty evaluation set");
  const double eps = model.config().cos_eps;
  std::vector<int> preds, labels;
  for (const auto& s : samples) {
    const double score =
        bacd_score(model.graph_embedding(s.g1), model.graph_embedding(s.g2), model.text_embedding(s.text), eps);
    preds.push_back(score > tau);
    labels.push_back(s.label);
  }
  return accuracy_f1(preds, labels);
}

ClsMetrics run_aqa(Model& model, const std::vector<AQASample>& samples) {
  if (samples.empty()) throw DataError("run_aqa: empty evaluation set");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& s : samples) {
    const auto probs = model.answer_probabilities(s.graph, s.question);
    std::vector<bool> gold(probs.size(), false);
    for (auto a : s.answers) {
      if (a >= gold.size()) throw DataError("run_aqa: answer id outside the answer head");
      gold[a] = true;
    }
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const bool p = probs[k] > 0.5;
      tp += p && gold[k];
      fp += p && !gold[k];
      tn += !p && !gold[k];
      fn += !p && gold[k];
    }
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

RougeScores run_ac(Model& model, const std::vector<ACSample>& samples, std::size_t beam, std::size_t max_len) {
  if (samples.empty()) throw DataError("run_ac: empty evaluation set");
  RougeScores total;
  for (const auto& s : samples) {
    const auto r = rouge_scores(model.caption(s.graph, beam, max_len), s.caption);
    total.r1 += r.r1;
    total.r2 += r.r2;
    total.rlsum += r.rlsum;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  return {total.r1 * inv, total.r2 * inv, total.rlsum * inv};
}

ClsMetrics run_acd_jaccard(const std::vector<ACDPair>& pairs, double tau) {
  if (pairs.empty()) throw DataError("run_acd_jaccard: empty evaluation set");
  std::vector<int> preds, labels;
  for (const auto& p : pairs) {
    preds.push_back(jaccard_similarity(p.g1, p.g2) > tau);
    labels.push_back(p.label);
  }
  return accuracy_f1(preds, labels);
}

ClsMetrics run_ar_name_baseline(const std::vector<BiModalSample>& samples) {
  if (samples.empty()) throw DataError("run_ar_name_baseline: empty evaluation set");
  std::vector<int> preds, labels;
  for (const auto& s : samples) {
    preds.push_back(s.graph.name && !s.graph.name->empty() && ar_name_baseline(*s.graph.name, s.text));
    labels.push_back(s.y > 0.5);
  }
  return accuracy_f1(preds, labels);
}

PcaResult pca_project(const std::vector<std::vector<double>>& x, std::size_t k) {
  const std::size_t n = x.size();
  if (n < 2) throw DataError("pca_project: need at least two points");
  const std::size_t d = x[0].size();
  for (const auto& row : x) {
    if (row.size() != d) throw ShapeError("pca_project: ragged input");
  }
  std::vector<double> mean(d, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j] / static_cast<double>(n);
  std::vector<std::vector<double>> xc(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xc[i][j] = x[i][j] - mean[j];
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : xc)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] += row[a] * row[b] / static_cast<double>(n - 1);
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += cov[a][a];

  PcaResult res;
  Rng rng(0x5ca1ab1eULL);
  for (std::size_t c = 0; c < std::min(k, d); ++c) {
    std::vector<double> v(d);
    for (auto& e : v) e = rng.uniform(-1.0, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 200000; ++it) {
      std::vector<double> w(d, 0.0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) w[a] += cov[a][b] * v[b];
      double norm = 0.0;
      for (double e : w) norm += e * e;
      norm = std::sqrt(norm);
      if (norm <= 1e-300) {
        lambda = 0.0;
        break;
      }
      double delta = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        w[a] /= norm;
        delta = std::max(delta, std::abs(w[a] - v[a]));
      }
      v = std::move(w);
      lambda = norm;
      if (delta < 1e-9) break;
    }
    if (lambda <= 1e-12 * std::max(trace, 1e-300)) {
      res.warning = "covariance has rank " + std::to_string(c) + " < " + std::to_string(k) +
                    "; returning " + std::to_string(c) + " components";
      break;
    }
    std::size_t big = 0;
    for (std::size_t a = 1; a < d; ++a)
      if (std::abs(v[a]) > std::abs(v[big])) big = a;
    if (v[big] < 0)
      for (auto& e : v) e = -e;
    // Rayleigh quotient for the reported eigenvalue.
    double rq = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) rq += v[a] * cov[a][b] * v[b];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a][b] -= rq * v[a] * v[b];
    res.eigenvalues.push_back(rq);
    res.components.push_back(v);
  }
  if (res.components.size() < k && res.warning.empty()) {
    res.warning = "input dimension " + std::to_string(d) + " < " + std::to_string(k);
  }
  res.coords.assign(n, std::vector<double>(res.components.size(), 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < res.components.size(); ++c)
      for (std::size_t j = 0; j < d; ++j) res.coords[i][c] += xc[i][j] * res.components[c][j];
  return res;
}

nlohmann::ordered_json metrics_json(const std::string& task, const ClsMetrics& m) {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["count"] = m.count();
  return j;
}

nlohmann::ordered_json metrics_json(const std::string& task, const RougeScores& r, std::size_t count) {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["rouge1"] = r.r1;
  j["rouge2"] = r.r2;
  j["rougeLsum"] = r.rlsum;
  j["count"] = count;
  return j;
}

}  // namespace archbert
