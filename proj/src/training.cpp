#include "archbert/training.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "archbert/catalog.hpp"
#include "archbert/error.hpp"
#include "archbert/rng.hpp"

namespace archbert {

std::string_view train_task_name(TrainTask t) {
  switch (t) {
    case TrainTask::Pretrain: return "pretrain";
    case TrainTask::AQA: return "aqa";
    case TrainTask::AC: return "ac";
    case TrainTask::ACD: return "acd";
  }
  return "?";
}

TrainTask parse_train_task(std::string_view name) {
  if (name == "pretrain") return TrainTask::Pretrain;
  if (name == "aqa") return TrainTask::AQA;
  if (name == "ac") return TrainTask::AC;
  if (name == "acd") return TrainTask::ACD;
  throw DataError("unknown training task '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw DataError("TrainConfig: batch_size must be at least 1");
  if (epochs < 1) throw DataError("TrainConfig: epochs must be at least 1");
  if (!(lr > 0.0)) throw DataError("TrainConfig: lr must be positive");
  if (!(alpha >= 0.0)) throw DataError("TrainConfig: alpha must be non-negative");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw DataError("TrainConfig: mask_ratio must lie in (0, 1)");
}

std::size_t mask_count(std::size_t m, double ratio) {
  const auto r = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(m)));
  return std::min(m, std::max<std::size_t>(1, r));
}

std::pair<ArchGraph, MaskPlan> mask_nodes(const ArchGraph& g, double ratio, Rng& rng) {
  const std::size_t m = g.size();
  if (m == 0) throw DataError("mask_nodes: empty graph");
  const std::size_t k = mask_count(m, ratio);
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(m) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  MaskPlan plan;
  ArchGraph masked = g;
  for (auto i : idx) {
    plan.positions.push_back(i);
    plan.original.push_back(g.nodes[i]);
    masked.nodes[i] = NodeVocab::kMask;
  }
  return {std::move(masked), std::move(plan)};
}

Var sim_loss(Var J_t, Var J_g, double y, double cos_eps) {
  return square(add_scalar(scale(cosine(J_t, J_g, cos_eps), -1.0), y));
}

Var sim_loss(const std::vector<Var>& J_t, const std::vector<Var>& J_g, const std::vector<double>& y, double cos_eps) {
  if (J_t.empty() || J_t.size() != J_g.size() || J_t.size() != y.size()) {
    throw ShapeError("sim_loss: batch components differ in length");
  }
  auto acc = sim_loss(J_t[0], J_g[0], y[0], cos_eps);
  for (std::size_t i = 1; i < J_t.size(); ++i) acc = add(acc, sim_loss(J_t[i], J_g[i], y[i], cos_eps));
  return scale(acc, 1.0 / static_cast<double>(J_t.size()));
}

Var mam_loss(Var F_m, const MaskPlan& plan) {
  if (plan.positions.empty()) throw DataError("mam_loss: no masked positions");
  std::vector<std::pair<std::size_t, std::size_t>> at;
  for (std::size_t k = 0; k < plan.positions.size(); ++k) at.emplace_back(plan.positions[k], plan.original[k]);
  return scale(mean_all(gather_elements(log_softmax(F_m), at)), -1.0);
}

double total_loss(double l_sim, double l_mam, double alpha, bool no_mam) {
  return no_mam ? l_sim : l_sim + alpha * l_mam;
}

Var total_loss(Var l_sim, Var l_mam, double alpha, bool no_mam) {
  return no_mam ? l_sim : add(l_sim, scale(l_mam, alpha));
}

Tensor aqa_targets(const std::vector<std::uint32_t>& answers, std::size_t count) {
  if (answers.empty()) throw DataError("AQA sample has no gold answers");
  Tensor t(1, count);
  for (auto a : answers) {
    if (a >= count) throw DataError("answer id " + std::to_string(a) + " outside the answer head");
    t[a] = 1.0;
  }
  return t;
}

Var aqa_loss(Var F_q, const Tensor& targets) { return bce_with_logits(F_q, targets); }

std::vector<TokenId> decoder_inputs(const TokenSeq& reference) {
  const std::size_t n = reference.real_length();
  if (n < 2) throw DataError("decoder reference needs [BOS] and [EOS]");
  return {reference.ids.begin(), reference.ids.begin() + static_cast<std::ptrdiff_t>(n - 1)};
}

Var decoder_loss(Var logits, const TokenSeq& reference) {
  const std::size_t n = reference.real_length();
  if (n < 2) throw DataError("decoder reference needs [BOS] and [EOS]");
  if (logits.rows() < n - 1) throw ShapeError("decoder_loss: fewer logit rows than reference targets");
  std::vector<std::pair<std::size_t, std::size_t>> at;
  for (std::size_t i = 0; i + 1 < n; ++i) at.emplace_back(i, reference.ids[i + 1]);
  return scale(mean_all(gather_elements(log_softmax(logits), at)), -1.0);
}

TextVocab vocab_from_texts(const std::vector<std::string>& texts, std::size_t max_size) {
  return build_vocab(texts, max_size);
}

std::string epoch_log_json(const EpochLog& e, TrainTask task) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["step"] = e.step;
  switch (task) {
    case TrainTask::Pretrain:
      j["l_sim"] = e.l_sim;
      j["l_mam"] = e.l_mam;
      break;
    case TrainTask::ACD: j["l_sim"] = e.l_sim; break;
    case TrainTask::AQA: j["l_aqa"] = e.l_aqa; break;
    case TrainTask::AC: j["l_dec"] = e.l_dec; break;
  }
  j["l_total"] = e.l_total;
  return j.dump();
}

namespace {

struct StepLosses {
  double l_sim = 0.0, l_mam = 0.0, l_aqa = 0.0, l_dec = 0.0, l_total = 0.0;
};

// Shared epoch/batch driver. `sample_loss` records one sample's objective
// on the tape and fills the logged components.
template <typename Sample, typename F>
TrainResult run_training(Model& model, const std::vector<Sample>& data, const TrainConfig& cfg, TrainTask task,
                         std::ostream* log, F&& sample_loss) {
  cfg.validate();
  if (data.empty()) throw DataError("training set is empty");
  AdamState opt;
  opt.cfg.lr = cfg.lr;
  auto& params = model.params();
  TrainResult result;
  std::size_t step = 0;
  const std::uint64_t base = mix_seed(cfg.seed);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order_rng = Rng::split(base, 2 * epoch);
    const auto order = permutation(data.size(), order_rng);
    const std::uint64_t sample_seed = mix_seed(base ^ (2 * epoch + 1));
    EpochLog e;
    e.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        Rng rng = Rng::split(sample_seed, idx);
        StepLosses s;
        try {
          Tape tape;
          const auto loss = sample_loss(tape, data[idx], rng, s);
          s.l_total = loss.item();
          tape.backward(scale(loss, w));
        } catch (const NumericError& err) {
          throw NumericError(std::string(err.what()) + " (task " + std::string(train_task_name(task)) + ", epoch " +
                             std::to_string(epoch) + ", sample " + std::to_string(idx) + ")");
        }
        e.l_sim += s.l_sim;
        e.l_mam += s.l_mam;
        e.l_aqa += s.l_aqa;
        e.l_dec += s.l_dec;
        e.l_total += s.l_total;
      }
      adam_step(params, opt);
      ++step;
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    e.step = step;
    e.l_sim *= inv;
    e.l_mam *= inv;
    e.l_aqa *= inv;
    e.l_dec *= inv;
    e.l_total *= inv;
    result.log.push_back(e);
    if (log) *log << epoch_log_json(e, task) << '\n';
    if (cfg.on_epoch && cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && cfg.on_epoch(e)) break;
  }
  params.zero_grad();
  if (!cfg.checkpoint.empty()) model.save(cfg.checkpoint);
  return result;
}

}  // namespace

TrainResult pretrain(Model& model, const std::vector<BiModalSample>& data, const TrainConfig& cfg, std::ostream* log) {
  const auto& mc = model.config();
  return run_training(model, data, cfg, TrainTask::Pretrain, log,
                      [&](Tape& t, const BiModalSample& s, Rng& rng, StepLosses& out) {
                        const auto jt = model.encode_text(t, s.text).J;
                        const auto jg = model.encode_graph(t, s.graph).J;
                        const auto l_sim = sim_loss(jt, jg, s.y, mc.cos_eps);
                        out.l_sim = l_sim.item();
                        if (mc.text_only) return l_sim;
                        // The masked graph goes through the graph path a second time.
                        auto [masked, plan] = mask_nodes(s.graph, cfg.mask_ratio, rng);
                        const auto H = model.encode_graph(t, masked).H;
                        const auto l_mam = mam_loss(model.mam_logits(t, H), plan);
                        out.l_mam = l_mam.item();
                        return total_loss(l_sim, l_mam, cfg.alpha, mc.no_mam);
                      });
}

TrainResult finetune_aqa(Model& model, const std::vector<AQASample>& data, const TrainConfig& cfg, std::ostream* log) {
  const std::size_t count = model.config().answer_count;
  return run_training(model, data, cfg, TrainTask::AQA, log,
                      [&](Tape& t, const AQASample& s, Rng&, StepLosses& out) {
                        const auto targets = aqa_targets(s.answers, count);
                        const auto jt = model.encode_text(t, s.question).J;
                        const auto jg = model.encode_graph(t, s.graph).J;
                        const auto l = aqa_loss(model.aqa_logits(t, jt, jg), targets);
                        out.l_aqa = l.item();
                        return l;
                      });
}

TrainResult finetune_ac(Model& model, const std::vector<ACSample>& data, const TrainConfig& cfg, std::ostream* log) {
  return run_training(model, data, cfg, TrainTask::AC, log,
                      [&](Tape& t, const ACSample& s, Rng&, StepLosses& out) {
                        const auto ref = model.tokenize(s.caption);
                        const auto H = model.encode_graph(t, s.graph).H;
                        const auto l = decoder_loss(model.decoder_logits(t, H, decoder_inputs(ref)), ref);
                        out.l_dec = l.item();
                        return l;
                      });
}

TrainResult train_acd(Model& model, const std::vector<ACDPair>& data, const TrainConfig& cfg, std::ostream* log) {
  const auto& mc = model.config();
  return run_training(model, data, cfg, TrainTask::ACD, log,
                      [&](Tape& t, const ACDPair& s, Rng&, StepLosses& out) {
                        const auto j1 = model.encode_graph(t, s.g1).J;
                        const auto j2 = model.encode_graph(t, s.g2).J;
                        const auto l = sim_loss(j1, j2, static_cast<double>(s.label), mc.cos_eps);
                        out.l_sim = l.item();
                        return l;
                      });
}

}  // namespace archbert
