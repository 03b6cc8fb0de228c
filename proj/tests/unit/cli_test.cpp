#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dstsa/cli/commands.hpp"
#include "dstsa/cli/config.hpp"
#include "dstsa/errors.hpp"

using namespace dstsa;
using namespace dstsa::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dstsa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Tiny model and data so a CLI training run takes well under a second.
std::vector<std::string> tiny_flags() {
  return {"--set", "model.base_channels=8",       "--set", "model.stage_depths=1,1",
          "--set", "model.input_frames=12",       "--set", "data.synthetic.frames=12",
          "--set", "data.synthetic.per_class=4",  "--set", "data.synthetic.val_per_class=2",
          "--set", "train.batch_size=8",          "--set", "train.warmup_epochs=2"};
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dstsa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result train(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"train", "--synthetic", "--classes", "4", "--epochs", "4",
                                  "--out", (dir_ / out).string()};
    for (auto& f : tiny_flags()) args.push_back(f);
    for (auto& e : extra) args.push_back(e);
    return run(args);
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsAreValid) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.model.num_classes, cfg.data.synthetic.classes);
  EXPECT_EQ(cfg.model.gc.groups, 8u);
}

TEST(Config, DumpParsesBackToTheSameConfig) {
  RunConfig cfg;
  set_value(cfg, "model.theta", "softmax");
  set_value(cfg, "model.branches", "M,S,g1,g2");
  set_value(cfg, "model.stage_depths", "2,1");
  set_value(cfg, "model.stca", "false");
  set_value(cfg, "train.lr", "0.05");
  set_value(cfg, "train.weight_decay", "0.0001");
  set_value(cfg, "train.modality", "bone_motion");
  set_value(cfg, "data.synthetic.noise", "0.003");
  const std::string text = dump_config(cfg);
  const RunConfig again = parse_config(text);
  EXPECT_EQ(dump_config(again), text);
  EXPECT_EQ(again.train.schedule.lr0, 0.05);
  EXPECT_EQ(again.data.synthetic.noise, 0.003);
  EXPECT_EQ(again.model.stage_depths, (std::vector<std::size_t>{2, 1}));
}

TEST(Config, EveryKeyRoundTrips) {
  const RunConfig cfg;
  for (const auto& key : config_keys()) {
    RunConfig copy;
    set_value(copy, key, get_value(cfg, key));
    EXPECT_EQ(dump_config(copy), dump_config(cfg)) << key;
  }
}

TEST(Config, ReportsEveryOffender) {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "model.groups = 4\nmodel.ker = 3\n# note\ntrain.lr = fast\nnoequals\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'model.ker'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'train.lr'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
  }
  EXPECT_THROW(set_value(cfg, "model.theta", "cosine"), ConfigError);
  EXPECT_THROW(set_value(cfg, "model.stca", "maybe"), ConfigError);
  EXPECT_THROW(apply_overrides(cfg, {"train.seed"}), ConfigError);
}

TEST(Config, LaterLayersWin) {
  RunConfig cfg = parse_config("train.seed = 3\nmodel.groups = 4\n");
  apply_overrides(cfg, {"train.seed=9"});
  EXPECT_EQ(cfg.train.seed, 9u);
  EXPECT_EQ(cfg.model.gc.groups, 4u);
}

TEST(Config, CrossSectionValidation) {
  RunConfig cfg;
  cfg.model.num_classes = 5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.data.synthetic.joints = 5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.model.graph = "chain5";
  EXPECT_NO_THROW(cfg.validate());
  cfg = RunConfig{};
  cfg.data.source = "shrec";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.data.source = "somewhere";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Cli, UnknownFlagIsAUsageErrorNamingIt) {
  const auto r = run({"train", "--ker=3"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--ker=3"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigKeyIsAUsageError) {
  const auto r = run({"summary", "--set", "model.ker=3"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("model.ker"), std::string::npos) << r.err;
}

TEST(Cli, NoCommandIsAUsageError) { EXPECT_EQ(run({}).code, kExitUsage); }

TEST(Cli, SummaryTotalsMatchCostModel) {
  const auto r = run({"summary", "--set", "model.input_frames=150", "--set",
                      "model.num_classes=14", "--set", "data.synthetic.classes=14"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  nn::ModelConfig cfg;
  const auto cost = nn::count_params_flops(cfg);
  EXPECT_NE(r.out.find(std::to_string(cost.params)), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(std::to_string(cost.mult_adds)), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("block11"), std::string::npos);
}

TEST_F(CliRun, TrainWritesCheckpointsAndLogs) {
  const auto r = train("a", {"--checkpoint-every", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "a" / "checkpoint-0002.ckp"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "final.ckp"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "metrics.json"));
  const auto log = lines(dir_ / "a" / "train_log.tsv");
  ASSERT_EQ(log.size(), 5u);
  EXPECT_EQ(log[0], "epoch\tlr\ttrain_loss\ttrain_acc\tval_acc\twall_seconds");
  // The dumped config reproduces the run's settings.
  const RunConfig dumped = parse_config(slurp(dir_ / "a" / "config.txt"));
  EXPECT_EQ(dumped.model.base_channels, 8u);
  EXPECT_EQ(dumped.train.schedule.epochs, 4u);
}

TEST_F(CliRun, SameSeedGivesIdenticalArtifacts) {
  ASSERT_EQ(train("a", {"--seed", "5"}).code, kExitOk);
  ASSERT_EQ(train("b", {"--seed", "5"}).code, kExitOk);
  ASSERT_EQ(train("c", {"--seed", "6"}).code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "a" / "final.ckp"), slurp(dir_ / "b" / "final.ckp"));
  EXPECT_NE(slurp(dir_ / "a" / "final.ckp"), slurp(dir_ / "c" / "final.ckp"));
}

TEST_F(CliRun, ResumeReproducesUninterruptedRun) {
  ASSERT_EQ(train("full").code, kExitOk);
  ASSERT_EQ(train("part", {"--stop-after", "2"}).code, kExitOk);
  ASSERT_TRUE(fs::exists(dir_ / "part" / "checkpoint-0002.ckp"));
  EXPECT_FALSE(fs::exists(dir_ / "part" / "final.ckp"));
  const auto r = run({"train", "--resume", (dir_ / "part" / "checkpoint-0002.ckp").string(),
                      "--out", (dir_ / "part").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto full = lines(dir_ / "full" / "train_log.tsv");
  const auto resumed = lines(dir_ / "part" / "train_log.tsv");
  ASSERT_EQ(full.size(), resumed.size());
  // Everything but the wall-clock column matches.
  for (std::size_t i = 0; i < full.size(); ++i) {
    EXPECT_EQ(full[i].substr(0, full[i].rfind('\t')), resumed[i].substr(0, resumed[i].rfind('\t')));
  }
  EXPECT_EQ(slurp(dir_ / "full" / "final.ckp"), slurp(dir_ / "part" / "final.ckp"));
}

TEST_F(CliRun, EvalReportsModalitiesAndFusion) {
  ASSERT_EQ(train("j").code, kExitOk);
  ASSERT_EQ(train("b", {"--modality", "bone"}).code, kExitOk);
  const auto j = (dir_ / "j" / "final.ckp").string();
  const auto b = (dir_ / "b" / "final.ckp").string();
  const auto single = run({"eval", "--checkpoint", j});
  ASSERT_EQ(single.code, kExitOk) << single.err;
  // One modality: the fused accuracy is that modality's accuracy.
  const auto acc = [](const std::string& text, const std::string& prefix) {
    const auto at = text.find(prefix + " accuracy ");
    return text.substr(at + prefix.size() + 10, 8);
  };
  EXPECT_EQ(acc(single.out, "joint"), acc(single.out, "fused"));

  const auto both = run({"eval", "--checkpoint", j, "--checkpoint", b, "--weights", "1,0",
                         "--out", (dir_ / "eval").string()});
  ASSERT_EQ(both.code, kExitOk) << both.err;
  EXPECT_NE(both.out.find("bone accuracy"), std::string::npos);
  EXPECT_EQ(acc(both.out, "fused"), acc(single.out, "joint"));
  const auto csv = lines(dir_ / "eval" / "confusion.csv");
  ASSERT_EQ(csv.size(), 5u);
  EXPECT_EQ(csv[0], "true\\pred,0,1,2,3");
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "eval.json"));
}

TEST_F(CliRun, EvalErrors) {
  ASSERT_EQ(train("j").code, kExitOk);
  const auto j = (dir_ / "j" / "final.ckp").string();
  EXPECT_EQ(run({"eval", "--checkpoint", (dir_ / "missing.ckp").string()}).code, kExitUsage);
  const auto mismatch = run({"eval", "--checkpoint", j, "--set", "data.synthetic.classes=5"});
  EXPECT_EQ(mismatch.code, kExitFailure);
  EXPECT_NE(mismatch.err.find("integrity"), std::string::npos) << mismatch.err;
  const auto joints = run({"eval", "--checkpoint", j, "--set", "data.synthetic.joints=5"});
  EXPECT_EQ(joints.code, kExitFailure) << joints.err;
  EXPECT_EQ(run({"eval", "--checkpoint", j, "--weights", "1,1"}).code, kExitUsage);
}

TEST_F(CliRun, ExportTopologyAndCam) {
  ASSERT_EQ(train("j").code, kExitOk);
  const auto ckp = (dir_ / "j" / "final.ckp").string();
  const auto csv = (dir_ / "static.csv").string();
  ASSERT_EQ(run({"export", "--checkpoint", ckp, "--out", csv}).code, kExitOk);
  const auto rows = lines(csv);
  EXPECT_EQ(rows[0], "layer,group,frame,i,j,value");
  EXPECT_EQ(rows.size() - 1, 8u * 22u * 22u);
  EXPECT_EQ(rows[1].rfind("block2,0,-1,0,0,", 0), 0u) << rows[1];

  // Temporal graphs of the last block (after one stride-2 block: 12 -> 6 frames).
  const auto tcsv = (dir_ / "temporal.csv").string();
  ASSERT_EQ(run({"export", "--checkpoint", ckp, "--kind", "temporal", "--sample", "1", "--out",
                 tcsv})
                .code,
            kExitOk);
  std::set<std::string> frames;
  const auto trows = lines(tcsv);
  for (std::size_t i = 1; i < trows.size(); ++i) {
    std::stringstream ss(trows[i]);
    std::string f;
    for (int k = 0; k < 3; ++k) std::getline(ss, f, ',');
    frames.insert(f);
  }
  EXPECT_EQ(frames.size(), 6u);
  EXPECT_EQ(trows.size() - 1, 8u * 6u * 22u * 22u);

  const auto cam = (dir_ / "cam.csv").string();
  ASSERT_EQ(run({"export", "--checkpoint", ckp, "--what", "cam", "--sample", "3", "--out", cam})
                .code,
            kExitOk);
  const auto crows = lines(cam);
  ASSERT_EQ(crows.size(), 7u);  // header + 6 frames
  EXPECT_NE(crows[0].find("min-max"), std::string::npos);
  for (std::size_t i = 1; i < crows.size(); ++i) {
    std::stringstream ss(crows[i]);
    std::size_t count = 0;
    for (std::string tok; std::getline(ss, tok, ',');) {
      const double v = std::stod(tok);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      ++count;
    }
    EXPECT_EQ(count, 22u);
  }

  const auto bad = run({"export", "--checkpoint", ckp, "--layer", "block7", "--out", csv});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("block0, block1, block2"), std::string::npos) << bad.err;
}

TEST_F(CliRun, ExportJsonRows) {
  ASSERT_EQ(train("j").code, kExitOk);
  const auto out = (dir_ / "channel.json").string();
  ASSERT_EQ(run({"export", "--checkpoint", (dir_ / "j" / "final.ckp").string(), "--kind",
                 "channel", "--format", "json", "--out", out})
                .code,
            kExitOk);
  const std::string text = slurp(out);
  EXPECT_NE(text.find("\"layer\": \"block2\""), std::string::npos);
  EXPECT_NE(text.find("\"frame\": -1"), std::string::npos);
}
