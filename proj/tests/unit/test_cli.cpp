#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "archbert/cli.hpp"
#include "archbert/dataset_io.hpp"
#include "archbert/numerics/checkpoint.hpp"
#include "helpers.hpp"

using namespace archbert;
using archbert::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const char* kToyConfig =
    "[gen]\n"
    "num_archs = 3\n"
    "num_val_archs = 2\n"
    "max_nodes = 12\n"
    "families = 3\n"
    "family_size = 2\n"
    "acd_pairs = 12\n"
    "[model]\n"
    "d = 8\n"
    "gat_heads = 2\n"
    "cross_heads = 2\n"
    "decoder_heads = 2\n"
    "[train]\n"
    "epochs = 2\n"
    "batch_size = 4\n"
    "lr = 0.001\n";

class Cli : public ::testing::Test {
 protected:
  TempDir dir{"cli"};
  std::string cfg = dir.file("toy.cfg");

  void SetUp() override { write_file_bytes(cfg, kToyConfig); }

  std::string f(const std::string& name) const { return dir.file(name); }

  void gen(const std::string& task, const std::string& out, const std::string& seed = "7") {
    const auto r = cli({"--config", cfg, "--seed", seed, "gen", "--task", task, "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  void pretrain(const std::string& data, const std::string& ckpt, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"--config", cfg, "--seed", "3", "--dataset", data, "--out", ckpt};
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"train", "--task", "pretrain", "--log", ckpt + ".log"});
    const auto r = cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }
};

}  // namespace

TEST_F(Cli, GenIsByteIdenticalOnRepeat) {
  gen("autonet", f("a.jsonl"));
  gen("autonet", f("b.jsonl"));
  const auto a = read_file_bytes(f("a.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read_file_bytes(f("b.jsonl")));
  gen("autonet", f("c.jsonl"), "8");
  EXPECT_NE(a, read_file_bytes(f("c.jsonl")));
  const auto data = load_bimodal(f("a.jsonl"));
  EXPECT_GE(data.size(), 30u);
  EXPECT_LE(data.size(), 33u);
}

TEST_F(Cli, GenEveryTask) {
  for (const char* task : {"aqa", "ac", "acd", "bacd", "tvhf-mine"}) {
    gen(task, f(std::string(task) + ".jsonl"));
    EXPECT_FALSE(read_jsonl(f(std::string(task) + ".jsonl")).empty()) << task;
  }
  EXPECT_EQ(load_aqa(f("aqa.jsonl")).size(), 3u * 35);
  EXPECT_EQ(load_acd(f("acd.jsonl")).size(), 12u);
}

TEST_F(Cli, GenToStdoutMatchesFile) {
  gen("autonet", f("a.jsonl"));
  const auto r = cli({"--config", cfg, "--seed", "7", "gen", "--task", "autonet"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, read_file_bytes(f("a.jsonl")));
}

TEST_F(Cli, EvalWithoutCheckpointIsUsageError) {
  gen("autonet", f("a.jsonl"));
  const auto r = cli({"--dataset", f("a.jsonl"), "eval", "--task", "ar"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--checkpoint"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen", "--task", "nope"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  write_file_bytes(f("bad.jsonl"), "{\"graph\": 3\n");
  EXPECT_EQ(cli({"stats", f("bad.jsonl")}).code, kExitData);
  EXPECT_EQ(cli({"stats", f("missing.jsonl")}).code, kExitData);
  write_file_bytes(f("cyclic.json"), R"({"nodes":["relu","linear"],"edges":[[0,1],[1,0]],"shapes":[[0,0,0,0],[4,4,1,1]]})");
  EXPECT_EQ(cli({"viz", "dot", "--graph", f("cyclic.json")}).code, kExitData);
  write_file_bytes(f("bad.cfg"), "[model]\nwidth = 3\n");
  EXPECT_EQ(cli({"--config", f("bad.cfg"), "gen", "--task", "autonet"}).code, kExitData);
  write_file_bytes(f("junk.ckpt"), "not a checkpoint");
  gen("autonet", f("a.jsonl"));
  const auto r = cli({"--checkpoint", f("junk.ckpt"), "--dataset", f("a.jsonl"), "eval", "--task", "ar"});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, HelpListsEveryFlagWithDefault) {
  const auto r = cli({"--help"});
  ASSERT_EQ(r.code, 0);
  for (const char* flag : {"--config", "--seed", "--out", "--checkpoint", "--dataset", "--beam", "--tau", "--alpha",
                           "--no-mam", "--no-cross-encoder", "--no-shape", "--no-edge", "--text-only", "--arch-only",
                           "--k"}) {
    const std::regex line("\\n\\s+" + std::string(flag) + "( [A-Z]+)? \\[[^\\]]*\\]");
    EXPECT_TRUE(std::regex_search(r.out, line)) << flag;
  }
  EXPECT_NE(r.out.find("--beam UINT [10]"), std::string::npos);
  EXPECT_NE(r.out.find("--tau FLOAT [0.5]"), std::string::npos);
  EXPECT_NE(r.out.find("--alpha FLOAT [0.05]"), std::string::npos);
  for (const std::vector<std::string>& sub :
       {std::vector<std::string>{"gen"}, {"train"}, {"eval"}, {"search", "query"}, {"caption"}}) {
    auto args = sub;
    args.push_back("--help");
    const auto h = cli(args);
    ASSERT_EQ(h.code, 0);
    std::istringstream lines(h.out);
    std::string l;
    while (std::getline(lines, l)) {
      if (l.rfind("  --", 0) != 0 || l.find("--help") != std::string::npos) continue;
      EXPECT_TRUE(l.find('[') != std::string::npos || l.find("REQUIRED") != std::string::npos) << sub[0] << ": " << l;
    }
  }
}

TEST_F(Cli, StatsUniqueOpsMatchesFile) {
  const auto r0 = cli({"--seed", "7", "gen", "--task", "autonet", "--count", "40", "--out", f("big.jsonl")});
  ASSERT_EQ(r0.code, 0) << r0.err;
  const auto r = cli({"stats", f("big.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  std::set<std::string> ops, graphs;
  for (const auto& s : load_bimodal(f("big.jsonl"))) {
    for (const auto& op : extract_present_ops(s.graph)) ops.insert(op);
    graphs.insert(serialize_graph(s.graph));
  }
  EXPECT_EQ(j.at("unique_ops").get<std::size_t>(), ops.size());
  EXPECT_EQ(j.at("architectures").get<std::size_t>(), graphs.size());
  // Forty random graphs of 8 to 64 nodes cover the configured op list.
  EXPECT_EQ(ops.size(), GenConfig::default_op_vocab().size());
  EXPECT_EQ(cli({"--dataset", f("big.jsonl"), "stats"}).out, r.out);
}

TEST_F(Cli, TrainEvalSearchAreDeterministic) {
  gen("autonet", f("a.jsonl"));
  pretrain(f("a.jsonl"), f("m1.ckpt"));
  pretrain(f("a.jsonl"), f("m2.ckpt"));
  EXPECT_EQ(read_file_bytes(f("m1.ckpt")), read_file_bytes(f("m2.ckpt")));
  EXPECT_EQ(read_file_bytes(f("m1.ckpt.log")), read_file_bytes(f("m2.ckpt.log")));

  std::string metrics[2], index[2], hits[2];
  for (int k = 0; k < 2; ++k) {
    const auto ck = f("m" + std::to_string(k + 1) + ".ckpt");
    const auto e = cli({"--checkpoint", ck, "--dataset", f("a.jsonl"), "eval", "--task", "ar"});
    ASSERT_EQ(e.code, 0) << e.err;
    metrics[k] = e.out;
    const auto idx = f("i" + std::to_string(k) + ".abix");
    const auto b = cli({"--checkpoint", ck, "--dataset", f("a.jsonl"), "--out", idx, "search", "build"});
    ASSERT_EQ(b.code, 0) << b.err;
    index[k] = read_file_bytes(idx);
    const auto q = cli({"--checkpoint", ck, "--k", "2", "search", "query", "--index", idx, "--query", "a network"});
    ASSERT_EQ(q.code, 0) << q.err;
    hits[k] = q.out;
  }
  EXPECT_EQ(metrics[0], metrics[1]);
  EXPECT_EQ(index[0], index[1]);
  EXPECT_EQ(hits[0], hits[1]);
  const auto m = nlohmann::json::parse(metrics[0]);
  EXPECT_EQ(m.at("task"), "ar");
  EXPECT_EQ(m.at("count").get<std::size_t>(), load_bimodal(f("a.jsonl")).size());
  EXPECT_EQ(nlohmann::json::parse(hits[0]).at("hits").size(), 2u);

  // An index from another checkpoint is refused.
  pretrain(f("a.jsonl"), f("other.ckpt"), {"--alpha", "0.5"});
  const auto bad = cli({"--checkpoint", f("other.ckpt"), "search", "query", "--index", f("i0.abix"), "--query", "x"});
  EXPECT_EQ(bad.code, kExitData);
}

TEST_F(Cli, NoMamFlagKeepsMamOutOfTotal) {
  gen("autonet", f("a.jsonl"));
  pretrain(f("a.jsonl"), f("nm.ckpt"), {"--no-mam"});
  std::istringstream log(read_file_bytes(f("nm.ckpt.log")));
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_GT(j.at("l_mam").get<double>(), 0.0);
    EXPECT_EQ(j.at("l_total").get<double>(), j.at("l_sim").get<double>());
    ++n;
  }
  EXPECT_EQ(n, 2u);
}

TEST_F(Cli, OneOffCommands) {
  gen("autonet", f("a.jsonl"));
  pretrain(f("a.jsonl"), f("m.ckpt"));
  write_file_bytes(f("g.json"), R"({"nodes":["conv2d","relu","linear"],"edges":[[0,1],[1,2]],"shapes":[[8,3,3,3],[0,0,0,0],[10,8,1,1]]})");
  write_file_bytes(f("h.json"), R"({"nodes":["conv2d","relu","maxpool2d"],"edges":[[0,1],[1,2]],"shapes":[[8,3,3,3],[0,0,0,0],[0,0,0,0]]})");
  const auto ck = f("m.ckpt");

  const auto reason = cli({"--checkpoint", ck, "reason", "--graph", f("g.json"), "--text", "a conv network"});
  ASSERT_EQ(reason.code, 0) << reason.err;
  const auto rj = nlohmann::json::parse(reason.out);
  EXPECT_TRUE(rj.at("verdict") == "correct" || rj.at("verdict") == "incorrect");
  EXPECT_EQ(rj.at("verdict") == "correct", rj.at("score").get<double>() > 0.5);

  const auto clone = cli({"--checkpoint", ck, "clone", "--graph", f("g.json"), "--graph2", f("h.json")});
  ASSERT_EQ(clone.code, 0) << clone.err;
  EXPECT_NEAR(nlohmann::json::parse(clone.out).at("jaccard").get<double>(), 5.0 / 12.0, 1e-12);

  const auto qa = cli({"--checkpoint", ck, "qa", "--graph", f("g.json"), "--question", "which activations are used"});
  ASSERT_EQ(qa.code, 0) << qa.err;
  EXPECT_TRUE(nlohmann::json::parse(qa.out).contains("answers"));

  const auto cap = cli({"--checkpoint", ck, "--beam", "2", "caption", "--graph", f("g.json"), "--max-len", "5"});
  ASSERT_EQ(cap.code, 0) << cap.err;
  EXPECT_TRUE(nlohmann::json::parse(cap.out).at("caption").is_string());
  EXPECT_EQ(cli({"--checkpoint", ck, "--beam", "2", "caption", "--graph", f("g.json"), "--max-len", "5"}).out, cap.out);

  const auto dot = cli({"viz", "dot", "--graph", f("g.json")});
  ASSERT_EQ(dot.code, 0);
  EXPECT_EQ(dot.out.rfind("digraph", 0), 0u);

  const auto pca = cli({"--checkpoint", ck, "--dataset", f("a.jsonl"), "viz", "pca"});
  ASSERT_EQ(pca.code, 0) << pca.err;
  std::istringstream rows(pca.out);
  std::string header;
  std::getline(rows, header);
  EXPECT_EQ(header, "label,x,y");
}
