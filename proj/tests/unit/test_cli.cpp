#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "wta/checkpoint.hpp"
#include "wta/cli.hpp"
#include "wta/error.hpp"
#include "wta/run_config.hpp"

namespace wta {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("wta_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  std::string train_config(const std::string& layer = "wta", int steps = 10,
                           const std::string& profile = "desk") const {
    return R"({"layer": ")" + layer + R"(", "profile": ")" + profile + R"(",
      "data": {"synthetic": {"classes": 100, "dim": 64, "per_class": 6, "test_per_class": 2, "spread": 0.05, "seed": 3}},
      "train": {"steps": )" + std::to_string(steps) + R"(, "learning_rate": 0.1, "K": 20, "batch_size": 8},
      "output": {"checkpoint": ")" + path("ck.bin") + R"(", "log": ")" + path("log.csv") + R"(",
                 "test_data": ")" + path("test.bin") + R"("}})";
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, MissingConfigFailsWithoutOutputs) {
  EXPECT_EQ(run({"train", "--config", path("absent.json")}), kExitUsage);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"eval", "--data", "x"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(CliTest, UnknownConfigKeyRejected) {
  write("c.json", R"({"train": {"stpes": 3}})");
  EXPECT_EQ(run({"train", "-c", path("c.json")}), kExitUsage);
  EXPECT_NE(err_.str().find("train.stpes"), std::string::npos);
  write("c.json", R"({"colour": 1})");
  EXPECT_EQ(run({"train", "-c", path("c.json")}), kExitUsage);
  write("c.json", R"({"train": {"steps": "ten"}})");
  EXPECT_EQ(run({"train", "-c", path("c.json")}), kExitUsage);
}

TEST_F(CliTest, TrainThenEvalRoundTrip) {
  write("c.json", train_config());
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(path("ck.bin")));
  EXPECT_TRUE(fs::exists(path("ck.bin.config.json")));
  EXPECT_TRUE(fs::exists(path("log.csv.config.json")));
  const std::string log = read(path("log.csv"));
  EXPECT_EQ(log.rfind("step,loss,lr,miss_rate,mean_active\n", 0), 0u);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 11);

  const auto ck = load_checkpoint(path("ck.bin"));
  EXPECT_EQ(ck.step, 10u);
  EXPECT_EQ(ck.model.num_classes, 100u);

  ASSERT_EQ(run({"eval", "--checkpoint", path("ck.bin"), "--data", path("test.bin"), "--metrics",
                 "top1,p@1,p@5,miss_rate", "-o", path("eval.csv")}),
            kExitOk)
      << err_.str();
  const std::string eval = read(path("eval.csv"));
  EXPECT_EQ(eval.rfind("metric,value\ntop1,", 0), 0u);
  EXPECT_NE(eval.find("p@5,"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("eval.csv.config.json")));
}

TEST_F(CliTest, EffectiveConfigEchoResolvesDefaults) {
  write("c.json", train_config());
  ASSERT_EQ(run({"train", "-c", path("c.json"), "--set", "train.momentum=0.5", "--steps", "3"}), kExitOk);
  const auto echo = nlohmann::json::parse(read(path("ck.bin.config.json")));
  EXPECT_EQ(echo["train"]["momentum"], 0.5);
  EXPECT_EQ(echo["train"]["steps"], 3);
  EXPECT_EQ(echo["wta"]["P"], 120);
  EXPECT_EQ(echo["wta"]["M"], 40);
  EXPECT_EQ(echo["wta"]["k"], 16);
  EXPECT_EQ(echo["profile"], "desk");
  // The echo is itself a valid config.
  EXPECT_NO_THROW(RunConfig::from_json(echo));
}

TEST_F(CliTest, TrainingLogIsDeterministic) {
  write("c.json", train_config("wta", 25));
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  const std::string first = read(path("log.csv"));
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  EXPECT_EQ(read(path("log.csv")), first);
  ASSERT_EQ(run({"train", "-c", path("c.json"), "--seed", "2"}), kExitOk);
  EXPECT_NE(read(path("log.csv")), first);
}

TEST_F(CliTest, ExactAndFullRetrievalEvalAgree) {
  write("c.json", train_config("wta", 200, "full"));
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  ASSERT_EQ(run({"eval", "--checkpoint", path("ck.bin"), "--data", path("test.bin"), "--exact"}), kExitOk);
  const std::string exact = out_.str();
  ASSERT_EQ(run({"eval", "--checkpoint", path("ck.bin"), "--data", path("test.bin"), "--K", "100"}), kExitOk);
  const std::string sparse = out_.str();
  const double a = std::stod(exact.substr(exact.find("top1,") + 5));
  const double b = std::stod(sparse.substr(sparse.find("top1,") + 5));
  EXPECT_GT(a, 0.0);
  EXPECT_LE(std::fabs(a - b), 0.01 * a);
}

TEST_F(CliTest, EmptyDatasetIsRuntimeError) {
  write("c.json", train_config());
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  write("empty.txt", "wta-dataset 1 64 100\n");
  EXPECT_EQ(run({"eval", "--checkpoint", path("ck.bin"), "--data", path("empty.txt"), "-o", path("e.csv")}),
            kExitRuntime);
  EXPECT_FALSE(fs::exists(path("e.csv")));
  write("t.json", R"({"data": {"train": ")" + path("empty.txt") + R"("}, "output": {"checkpoint": ")" +
                      path("ck2.bin") + R"("}})");
  EXPECT_EQ(run({"train", "-c", path("t.json")}), kExitRuntime);
  EXPECT_FALSE(fs::exists(path("ck2.bin")));
}

TEST_F(CliTest, IndexStatsSingleClass) {
  write("one.txt", "wta-dataset 1 16 1\n0 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16\n");
  write("c.json", R"({"data": {"train": ")" + path("one.txt") + R"("}, "train": {"steps": 2, "batch_size": 1},
                      "output": {"checkpoint": ")" + path("ck.bin") + R"("}})");
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk) << err_.str();
  ASSERT_EQ(run({"index-stats", "--checkpoint", path("ck.bin"), "--data", path("one.txt")}), kExitOk) << err_.str();
  std::map<std::string, std::string> rows;
  std::istringstream in(out_.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,key,value");
  std::size_t tables = 0;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    const std::string kind = line.substr(0, a), key = line.substr(a + 1, b - a - 1), value = line.substr(b + 1);
    if (kind == "occupied_per_table") {
      EXPECT_EQ(value, "1");
      ++tables;
    }
    rows[kind + "." + key] = value;
  }
  EXPECT_EQ(tables, 1000u);
  EXPECT_EQ(rows["summary.max_bucket_size"], "1");
  EXPECT_EQ(rows["summary.mean_bucket_size"], "1");
  EXPECT_TRUE(rows.count("query.miss_rate"));
  EXPECT_TRUE(rows.count("query.empty_band_fraction"));
}

TEST_F(CliTest, IndexStatsNeedsAnIndex) {
  write("c.json", train_config("exact", 2));
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  EXPECT_EQ(run({"index-stats", "--checkpoint", path("ck.bin")}), kExitRuntime);
}

TEST_F(CliTest, GenDataAndBench) {
  ASSERT_EQ(run({"gen-data", "--classes", "20", "--dim", "16", "--per-class", "5", "--test-per-class", "1", "-o",
                 path("train.bin"), "--test-out", path("test.txt"), "--text"}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(path("train.bin")));
  EXPECT_TRUE(fs::exists(path("test.txt")));
  write("b.json", R"({"bench": {"classes": 300, "dim": 16, "batch_sizes": [1, 2], "K_values": [5, 50],
                                "repetitions": 30, "warmup": 1, "agreement_queries": 10}})");
  ASSERT_EQ(run({"bench", "-c", path("b.json"), "-o", path("bench.csv")}), kExitOk) << err_.str();
  const std::string csv = read(path("bench.csv"));
  EXPECT_NE(csv.find("kind,N,d,batch,K,reps"), std::string::npos);
  EXPECT_NE(csv.find("\nwta,300,16,2,50,30,"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("bench.csv.config.json")));
  write("bad.json", R"({"bench": {"repetitions": 5}})");
  EXPECT_EQ(run({"bench", "-c", path("bad.json")}), kExitUsage);
}

TEST_F(CliTest, TradeoffBench) {
  write("c.json", train_config("exact", 100));
  ASSERT_EQ(run({"train", "-c", path("c.json")}), kExitOk);
  ASSERT_EQ(run({"bench", "--tradeoff", "--checkpoint", path("ck.bin"), "--data", path("test.bin"), "--K-grid",
                 "5,100", "-o", path("t.csv"), "--svg", path("t.svg")}),
            kExitOk)
      << err_.str();
  EXPECT_NE(read(path("t.csv")).find("\n100,"), std::string::npos);
  EXPECT_NE(read(path("t.svg")).find("<svg"), std::string::npos);
}

TEST(RunConfig, OverridesAndProfiles) {
  const auto c = parse_run_config(R"({"profile": "full"})", {"train.K=7", "wta.P=60", "wta.M=20", "layer=hs"});
  EXPECT_EQ(c.train.top_k, 7u);
  EXPECT_EQ(c.layer, LayerKind::kHierarchical);
  const auto p = c.wta_params(32);
  EXPECT_EQ(p.window, 16u);
  EXPECT_EQ(p.permutations, 60u);
  EXPECT_EQ(p.bands, 20u);
  EXPECT_EQ(parse_run_config("{}").wta_params(32).permutations, 3000u);
  EXPECT_EQ(parse_run_config("{}").wta_params(32).bands, 1000u);
  EXPECT_EQ(parse_run_config(R"({"profile": "desk"})").wta_params(32).permutations, 120u);
  EXPECT_THROW(parse_run_config(R"({"profile": "laptop"})"), ConfigError);
  EXPECT_THROW(parse_run_config("{}", {"novalue"}), ConfigError);
  EXPECT_THROW(parse_run_config("{", {}), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"train": {"momentum": 1.5}})"), ConfigError);
}

}  // namespace
}  // namespace wta
