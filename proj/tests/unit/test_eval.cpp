#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "archbert/error.hpp"
#include "archbert/eval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace archbert;
using archbert::testing::chain;
using archbert::testing::make_graph;

namespace {

nlohmann::json load_golden() {
  std::ifstream in(std::string(ARCHBERT_SOURCE_DIR) + "/tests/data/metrics_golden.json");
  EXPECT_TRUE(in.good());
  return nlohmann::json::parse(in);
}

double frac(const nlohmann::json& f) { return f.at(0).get<double>() / f.at(1).get<double>(); }

ModelConfig tiny() {
  ModelConfig c;
  c.d = 8;
  c.gat_heads = 2;
  c.cross_heads = 2;
  c.decoder_heads = 2;
  c.max_nodes = 16;
  c.max_tokens = 16;
  c.init_seed = 5;
  return c;
}

TextVocab small_vocab() { return TextVocab({"conv", "relu", "linear", "the", "network", "has"}); }

void fill(Model& m, const std::string& name, double v) { m.params().get(name).value.fill(v); }

}  // namespace

TEST(Metrics, WorkedExample) {
  const auto m = accuracy_f1({1, 0, 1, 1}, {1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_NEAR(m.f1, 0.8, 1e-15);
  EXPECT_EQ(m.count(), 4u);
}

TEST(Metrics, PerfectAndAllNegative) {
  const auto p = accuracy_f1({1, 0, 1}, {1, 0, 1});
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(p.f1, 1.0);
  const auto n = accuracy_f1({0, 0, 0}, {0, 0, 0});
  EXPECT_EQ(n.accuracy, 1.0);
  EXPECT_EQ(n.precision, 0.0);
  EXPECT_EQ(n.recall, 0.0);
  EXPECT_EQ(n.f1, 0.0);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(accuracy_f1({}, {}), DataError);
  EXPECT_THROW(accuracy_f1({1}, {1, 0}), DataError);
}

TEST(Metrics, F1IdentityOnRandomCounts) {
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 40));
    std::vector<int> p, l;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(static_cast<int>(rng.uniform_int(0, 1)));
      l.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    const auto m = accuracy_f1(p, l);
    ASSERT_EQ(m.count(), n);
    const double want = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    ASSERT_NEAR(m.f1, want, 1e-15);
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(GoldenFile, MetricsAndRouge) {
  const auto golden = load_golden();
  const auto& cases = golden.at("cases");
  ASSERT_EQ(cases.size(), 10u);
  bool saw_f1 = false, saw_r1 = false;
  for (const auto& c : cases) {
    const auto name = c.at("name").get<std::string>();
    const auto& e = c.at("expect");
    if (c.at("kind") == "accuracy_f1") {
      const auto m = accuracy_f1(c.at("preds").get<std::vector<int>>(), c.at("labels").get<std::vector<int>>());
      EXPECT_EQ(m.tp, c.at("counts").at("tp").get<std::size_t>()) << name;
      EXPECT_EQ(m.fp, c.at("counts").at("fp").get<std::size_t>()) << name;
      EXPECT_EQ(m.tn, c.at("counts").at("tn").get<std::size_t>()) << name;
      EXPECT_EQ(m.fn, c.at("counts").at("fn").get<std::size_t>()) << name;
      EXPECT_NEAR(m.accuracy, frac(e.at("accuracy")), 1e-12) << name;
      EXPECT_NEAR(m.precision, frac(e.at("precision")), 1e-12) << name;
      EXPECT_NEAR(m.recall, frac(e.at("recall")), 1e-12) << name;
      EXPECT_NEAR(m.f1, frac(e.at("f1")), 1e-12) << name;
      saw_f1 = saw_f1 || frac(e.at("f1")) == 0.8;
    } else {
      const auto r = rouge_scores(c.at("candidate").get<std::string>(), c.at("reference").get<std::string>());
      EXPECT_NEAR(r.r1, frac(e.at("r1")), 1e-12) << name;
      EXPECT_NEAR(r.r2, frac(e.at("r2")), 1e-12) << name;
      EXPECT_NEAR(r.rlsum, frac(e.at("rlsum")), 1e-12) << name;
      saw_r1 = saw_r1 || frac(e.at("r1")) == 0.8;
    }
  }
  EXPECT_TRUE(saw_f1);
  EXPECT_TRUE(saw_r1);
}

TEST(Rouge, Examples) {
  const auto same = rouge_scores("the cat sat", "the cat sat");
  EXPECT_EQ(same.r1, 1.0);
  EXPECT_EQ(same.r2, 1.0);
  EXPECT_EQ(same.rlsum, 1.0);
  const auto part = rouge_scores("the cat", "the cat sat");
  EXPECT_NEAR(part.r1, 0.8, 1e-15);
  const auto none = rouge_scores("dog", "the cat");
  EXPECT_EQ(none.r1, 0.0);
  EXPECT_EQ(none.r2, 0.0);
  EXPECT_EQ(none.rlsum, 0.0);
  const auto empty = rouge_scores("", "the cat");
  EXPECT_EQ(empty.r1, 0.0);
  EXPECT_EQ(empty.rlsum, 0.0);
}

TEST(Rouge, CaseAndPunctuationIgnored) {
  const auto r = rouge_scores("The CAT, sat!", "the cat sat");
  EXPECT_EQ(r.r1, 1.0);
  EXPECT_EQ(r.r2, 1.0);
}

TEST(Rouge, RepeatedUnigramsAreClipped) {
  // cand "the the the" vs ref "the cat": overlap 1, p 1/3, r 1/2.
  const auto r = rouge_scores("the the the", "the cat");
  EXPECT_NEAR(r.r1, 2.0 * (1.0 / 3.0) * 0.5 / (1.0 / 3.0 + 0.5), 1e-15);
}

TEST(Rouge, ScoresInUnitInterval) {
  Rng rng(8);
  const std::vector<std::string> words{"a", "b", "c", "d", "."};
  for (int k = 0; k < 300; ++k) {
    std::string c, r;
    for (auto n = rng.uniform_int(0, 8); n > 0; --n) c += words[rng.uniform_int(0, 4)] + " ";
    for (auto n = rng.uniform_int(1, 8); n > 0; --n) r += words[rng.uniform_int(0, 4)] + " ";
    const auto s = rouge_scores(c, r);
    for (double v : {s.r1, s.r2, s.rlsum}) {
      ASSERT_GE(v, 0.0) << c << "|" << r;
      ASSERT_LE(v, 1.0 + 1e-15) << c << "|" << r;
    }
  }
}

TEST(Jaccard, WorkedExample) {
  const auto a = chain({"conv2d", "relu", "linear"});
  const auto b = chain({"conv2d", "relu", "maxpool2d"});
  EXPECT_EQ(jaccard_similarity(a, b), 5.0 / 12.0);
  EXPECT_EQ(jaccard_similarity(a, a), 1.0);
  EXPECT_EQ(jaccard_similarity(chain({"conv2d", "relu"}), chain({"linear", "sigmoid"})), 0.0);
  // Both edgeless: node IoU alone.
  EXPECT_NEAR(jaccard_similarity(chain({"relu"}), make_graph({"relu", "linear"}, {})), 0.5, 1e-15);
}

TEST(Jaccard, MatchesBruteForceOnChainsUpToSixNodes) {
  const auto graphs = oracle::enumerate_graphs({"conv2d", "relu", "linear"}, 6, true);
  ASSERT_EQ(graphs.size(), 3u + 9 + 27 + 81 + 243 + 729);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::size_t j = i; j < graphs.size(); ++j) {
      const double got = jaccard_similarity(graphs[i], graphs[j]);
      mismatches += got != oracle::graph_jaccard(graphs[i], graphs[j]);
      mismatches += got != jaccard_similarity(graphs[j], graphs[i]);
    }
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Jaccard, MatchesBruteForceOnAllSmallDags) {
  const auto small = oracle::enumerate_graphs({"conv2d", "relu", "linear"}, 3, false);
  ASSERT_EQ(small.size(), 3u + 2 * 9 + 8 * 27);
  std::size_t mismatches = 0;
  for (const auto& a : small) {
    for (const auto& b : small) mismatches += jaccard_similarity(a, b) != oracle::graph_jaccard(a, b);
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(ArNameBaseline, Examples) {
  EXPECT_TRUE(ar_name_baseline("resnet18", "image classifier with resnet18 blocks"));
  EXPECT_FALSE(ar_name_baseline("resnet18", "a bert model"));
  EXPECT_TRUE(ar_name_baseline("ResNet18", "uses resnet18"));
}

TEST(ArNameBaseline, Runner) {
  auto named = chain({"conv2d", "relu"});
  named.name = "tinynet";
  const std::vector<BiModalSample> s{
      {named, "the TinyNet model", 1.0}, {named, "a transformer", 0.0}, {chain({"relu"}), "tinynet", 1.0}};
  const auto m = run_ar_name_baseline(s);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_THROW(run_ar_name_baseline({}), DataError);
}

TEST(JaccardBaseline, Runner) {
  const auto a = chain({"conv2d", "relu", "linear"});
  const auto b = chain({"conv2d", "relu", "maxpool2d"});
  const std::vector<ACDPair> pairs{{a, a, 1}, {a, b, 0}, {a, chain({"sigmoid"}), 0}};
  const auto m = run_acd_jaccard(pairs, 0.5);  // 5/12 < 0.5
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(run_acd_jaccard(pairs, 5.0 / 12.0).tp, 1u);
}

TEST(BacdScore, HandComputed) {
  // cos(g1,g2) = 1/sqrt2, cos(g1,t) = 0, cos(g2,t) = 1/sqrt2.
  EXPECT_NEAR(bacd_score({1, 0, 0}, {1, 1, 0}, {0, 1, 0}, 1e-8), std::sqrt(2.0) / 3.0, 1e-15);
  EXPECT_NEAR(bacd_score({1, 2, 3}, {1, 2, 3}, {2, 4, 6}, 1e-8), 1.0, 1e-15);
  EXPECT_EQ(bacd_score({1, 0, 0}, {0, 1, 0}, {0, 0, 1}, 1e-8), 0.0);
}

TEST(Cosine, ClampAndErrors) {
  EXPECT_EQ(cosine_similarity({0, 0}, {1, 0}, 1e-8), 0.0);
  EXPECT_THROW(cosine_similarity({1}, {1, 0}, 1e-8), ShapeError);
}

TEST(RunAr, StrictThreshold) {
  Model m(tiny(), small_vocab());
  const auto g = chain({"conv2d", "relu", "linear"});
  const double s = m.score("the network has relu", g);
  const std::vector<BiModalSample> pos{{g, "the network has relu", 1.0}};
  EXPECT_EQ(run_ar(m, pos, s).tp, 0u);  // score == tau is incorrect
  EXPECT_EQ(run_ar(m, pos, std::nextafter(s, -2.0)).tp, 1u);
  EXPECT_THROW(run_ar(m, {}, 0.5), DataError);
}

TEST(RunAcd, IdenticalGraphsAreSimilar) {
  Model m(tiny(), small_vocab());
  const auto g = chain({"conv2d", "relu", "linear"});
  const auto r = run_acd(m, {{g, g, 1}}, 0.5);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(run_acd(m, {{g, g, 1}}, 1.0).tp, 0u);
}

TEST(RunBacd, RunsAndIsRepeatable) {
  Model m(tiny(), small_vocab());
  const auto g = chain({"conv2d", "relu"});
  const std::vector<BACDSample> s{{g, g, "conv relu", 1}, {g, chain({"linear"}), "linear", 0}};
  const auto a = run_bacd(m, s, 0.5);
  const auto b = run_bacd(m, s, 0.5);
  EXPECT_EQ(a.tp, b.tp);
  EXPECT_EQ(a.f1, b.f1);
  EXPECT_EQ(a.count(), 2u);
}

TEST(RunAqa, MicroAveragedHandCase) {
  auto c = tiny();
  c.answer_count = 3;
  Model m(c, small_vocab());
  fill(m, "head.aqa.fc2.w", 0.0);
  auto& b = m.params().get("head.aqa.fc2.b").value;
  b[0] = 1.0;
  b[1] = -1.0;
  b[2] = 1.0;
  const auto g = chain({"conv2d", "relu"});
  // Predictions are [1, 0, 1] for every sample.
  // Sample 1 gold {0, 1}: tp, fn, fp. Sample 2 gold {2}: fp, tn, tp.
  const std::vector<AQASample> s{{g, "has relu", {0, 1}}, {g, "has conv", {2}}};
  const auto r = run_aqa(m, s);
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fp, 2u);
  EXPECT_EQ(r.tn, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_NEAR(r.f1, 4.0 / 7.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);

  b.fill(0.0);  // sigmoid(0) = 0.5 is not above the threshold
  const auto z = run_aqa(m, s);
  EXPECT_EQ(z.tp + z.fp, 0u);
  EXPECT_EQ(z.recall, 0.0);

  b[0] = 5;
  b[1] = 5;
  b[2] = -5;
  EXPECT_EQ(run_aqa(m, {{g, "q", {0, 1}}}).f1, 1.0);
}

TEST(RunAc, EmptyAndPerfectGenerations) {
  Model m(tiny(), small_vocab());
  const auto g = chain({"conv2d", "relu", "linear"});
  const auto cap = m.caption(g, 3, 6);
  if (!cap.empty()) {
    const auto r = run_ac(m, {{g, cap}}, 3, 6);
    EXPECT_EQ(r.r1, 1.0);
    EXPECT_EQ(r.r2 == 1.0 || normalize_words(cap).size() < 2, true);
    EXPECT_EQ(r.rlsum, 1.0);
  }
  // Force [EOS] first: the caption is empty.
  fill(m, "dec.out.fc2.w", 0.0);
  auto& b = m.params().get("dec.out.fc2.b").value;
  b.fill(0.0);
  b[TextVocab::kEos] = 50.0;
  EXPECT_EQ(m.caption(g, 3, 6), "");
  const auto e = run_ac(m, {{g, "the network"}}, 3, 6);
  EXPECT_EQ(e.r1, 0.0);
  EXPECT_EQ(e.r2, 0.0);
  EXPECT_EQ(e.rlsum, 0.0);
  EXPECT_THROW(run_ac(m, {}, 3, 6), DataError);
}

TEST(Pca, LineHasOneComponent) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 6; ++i) pts.push_back({1.0 * i, 2.0 * i + 1.0});
  const auto r = pca_project(pts, 2);
  EXPECT_FALSE(r.warning.empty());
  ASSERT_EQ(r.components.size(), 1u);
  EXPECT_NEAR(r.components[0][0], 1.0 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(r.components[0][1], 2.0 / std::sqrt(5.0), 1e-9);

  // Slightly off the line the second axis is either dropped or tiny.
  Rng rng(2);
  for (auto& p : pts) p[1] += rng.uniform(-1e-9, 1e-9);
  const auto n = pca_project(pts, 2);
  for (const auto& c : n.coords) {
    if (c.size() > 1) {
      EXPECT_LE(std::abs(c[1]), 1e-6);
    }
  }
}

TEST(Pca, MatchesDenseEigensolver) {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> x(5, std::vector<double>(3));
    Eigen::MatrixXd X(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) X(i, j) = x[i][j] = rng.uniform(-2, 2);
    const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd cov = C.transpose() * C / 4.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto r = pca_project(x, 2);
    ASSERT_EQ(r.components.size(), 2u);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd v = es.eigenvectors().col(2 - k);  // ascending order
      Eigen::Index big;
      v.cwiseAbs().maxCoeff(&big);
      if (v(big) < 0) v = -v;
      EXPECT_NEAR(r.eigenvalues[k], es.eigenvalues()(2 - k), 1e-6);
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.components[k][j], v(j), 1e-6);
      const Eigen::VectorXd proj = C * v;
      for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.coords[i][k], proj(i), 1e-6);
    }
    // Reconstruction error with k = 2 is the smallest eigenvalue's share.
    double err = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) {
        double rec = 0.0;
        for (int k = 0; k < 2; ++k) rec += r.coords[i][k] * r.components[k][j];
        err += (C(i, j) - rec) * (C(i, j) - rec);
      }
    }
    EXPECT_NEAR(err, 4.0 * es.eigenvalues()(0), 1e-6);
  }
}

TEST(Pca, DuplicatedPointsProjectIdentically) {
  Rng rng(5);
  std::vector<std::vector<double>> x(6, std::vector<double>(4));
  for (auto& row : x)
    for (auto& v : row) v = rng.uniform(-1, 1);
  auto twice = x;
  twice.insert(twice.end(), x.begin(), x.end());
  const auto a = pca_project(x, 2);
  const auto b = pca_project(twice, 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(b.coords[i][k], b.coords[i + x.size()][k]);
      EXPECT_NEAR(a.coords[i][k], b.coords[i][k], 1e-8);
    }
  }
  EXPECT_THROW(pca_project({{1.0, 2.0}}, 2), DataError);
}

TEST(MetricsJson, Keys) {
  const auto j = metrics_json("ar", accuracy_f1({1, 0}, {1, 1}));
  EXPECT_EQ(j.at("task"), "ar");
  EXPECT_EQ(j.at("accuracy"), 0.5);
  EXPECT_EQ(j.at("count"), 2);
  const auto r = metrics_json("ac", RougeScores{0.5, 0.25, 0.5}, 4);
  EXPECT_EQ(r.at("rouge2"), 0.25);
  EXPECT_EQ(r.at("count"), 4);
}
