#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archbert/datagen.hpp"
#include "archbert/model.hpp"

namespace archbert {

struct ClsMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t count() const noexcept { return tp + fp + tn + fn; }
};

ClsMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
/// Binary metrics; zero denominators yield 0. Throws DataError on empty or
/// mismatched inputs.
ClsMetrics accuracy_f1(const std::vector<int>& preds, const std::vector<int>& labels);

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rlsum = 0.0;
};

/// ROUGE-1/2 and ROUGE-Lsum F-measures over textkit-normalized words.
/// Lsum splits both texts into sentences at newlines and periods.
RougeScores rouge_scores(const std::string& candidate, const std::string& reference);

/// 0.5 node-multiset IoU + 0.5 edge-type-multiset IoU; node IoU alone
/// when both graphs are edgeless.
double jaccard_similarity(const ArchGraph& a, const ArchGraph& b, const NodeVocab& vocab = NodeVocab::catalog());

/// Case-insensitive substring test.
bool ar_name_baseline(const std::string& arch_name, const std::string& statement);

ClsMetrics run_ar(Model& model, const std::vector<BiModalSample>& samples, double tau);
ClsMetrics run_acd(Model& model, const std::vector<ACDPair>& pairs, double tau);
/// Mean of cos(g1, g2), cos(g1, t) and cos(g2, t) against tau.
ClsMetrics run_bacd(Model& model, const std::vector<BACDSample>& samples, double tau);
double bacd_score(const std::vector<double>& g1, const std::vector<double>& g2, const std::vector<double>& t,
                  double cos_eps);
/// Micro-averaged over every answer slot of every sample.
ClsMetrics run_aqa(Model& model, const std::vector<AQASample>& samples);
/// Mean ROUGE over samples.
RougeScores run_ac(Model& model, const std::vector<ACSample>& samples, std::size_t beam, std::size_t max_len);

ClsMetrics run_acd_jaccard(const std::vector<ACDPair>& pairs, double tau);
/// Name-match baseline; samples without a graph name count as "incorrect".
ClsMetrics run_ar_name_baseline(const std::vector<BiModalSample>& samples);

/// Plain cosine with the clamp used by the model.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b, double eps);

struct PcaResult {
  std::vector<std::vector<double>> coords;      // N x k_found
  std::vector<std::vector<double>> components;  // k_found x d
  std::vector<double> eigenvalues;
  std::string warning;  // set when fewer than k components exist
};

/// Mean-centred projection onto the leading covariance eigenvectors,
/// found by power iteration with deflation. Each eigenvector's
/// largest-magnitude entry is made positive.
PcaResult pca_project(const std::vector<std::vector<double>>& x, std::size_t k = 2);

nlohmann::ordered_json metrics_json(const std::string& task, const ClsMetrics& m);
nlohmann::ordered_json metrics_json(const std::string& task, const RougeScores& r, std::size_t count);

}  // namespace archbert
