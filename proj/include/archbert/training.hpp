#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "archbert/datagen.hpp"
#include "archbert/model.hpp"
#include "archbert/numerics/optim.hpp"

namespace archbert {

enum class TrainTask { Pretrain, AQA, AC, ACD };

std::string_view train_task_name(TrainTask t);
TrainTask parse_train_task(std::string_view name);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps so far
  double l_sim = 0.0;
  double l_mam = 0.0;
  double l_aqa = 0.0;
  double l_dec = 0.0;
  double l_total = 0.0;
};

struct TrainConfig {
  double lr = 2e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  TrainTask task = TrainTask::Pretrain;
  double alpha = 5e-2;
  double mask_ratio = 0.15;
  std::size_t eval_every = 1;
  std::string checkpoint;  // written after the last epoch when set
  /// Called every `eval_every` epochs; returning true ends training.
  std::function<bool(const EpochLog&)> on_epoch;

  void validate() const;
};

struct MaskPlan {
  std::vector<std::size_t> positions;  // sorted
  std::vector<OpId> original;
};

/// max(1, round(ratio * m)).
std::size_t mask_count(std::size_t m, double ratio);

/// Replaces mask_count(m, ratio) distinct positions by the mask node.
std::pair<ArchGraph, MaskPlan> mask_nodes(const ArchGraph& g, double ratio, Rng& rng);

/// (y - cos(J_t, J_g))^2.
Var sim_loss(Var J_t, Var J_g, double y, double cos_eps);
/// Batch mean of the per-pair losses.
Var sim_loss(const std::vector<Var>& J_t, const std::vector<Var>& J_g, const std::vector<double>& y, double cos_eps);
/// Mean negative log-probability of the original ids at masked positions.
Var mam_loss(Var F_m, const MaskPlan& plan);
double total_loss(double l_sim, double l_mam, double alpha, bool no_mam);
Var total_loss(Var l_sim, Var l_mam, double alpha, bool no_mam);
/// 1 on the gold answer ids, 0 elsewhere. Throws DataError on an empty set.
Tensor aqa_targets(const std::vector<std::uint32_t>& answers, std::size_t count);
Var aqa_loss(Var F_q, const Tensor& targets);
/// Teacher-forced NLL. `logits` row i predicts reference token i + 1;
/// rows past the real reference are ignored.
Var decoder_loss(Var logits, const TokenSeq& reference);
/// Decoder input ids for a reference: its real tokens except the last.
std::vector<TokenId> decoder_inputs(const TokenSeq& reference);

struct TrainResult {
  std::vector<EpochLog> log;
};

TrainResult pretrain(Model& model, const std::vector<BiModalSample>& data, const TrainConfig& cfg,
                     std::ostream* log = nullptr);
TrainResult finetune_aqa(Model& model, const std::vector<AQASample>& data, const TrainConfig& cfg,
                         std::ostream* log = nullptr);
TrainResult finetune_ac(Model& model, const std::vector<ACSample>& data, const TrainConfig& cfg,
                        std::ostream* log = nullptr);
/// Similarity regression on graph pairs.
TrainResult train_acd(Model& model, const std::vector<ACDPair>& data, const TrainConfig& cfg,
                      std::ostream* log = nullptr);

/// Word vocabulary over every text field of the given corpora.
TextVocab vocab_from_texts(const std::vector<std::string>& texts, std::size_t max_size);

std::string epoch_log_json(const EpochLog& e, TrainTask task);

}  // namespace archbert
