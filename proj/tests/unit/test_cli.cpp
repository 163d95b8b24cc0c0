#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "empo2/cli.hpp"
#include "empo2/policy.hpp"
#include "empo2/trainer.hpp"

using namespace empo2;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("empo2-cli-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Short training run settings shared by most cases.
const std::vector<std::string> kQuick = {"--iters", "3", "--set", "test_variants=5-6"};

std::vector<std::string> with_quick(std::vector<std::string> args) {
  args.insert(args.end(), kQuick.begin(), kQuick.end());
  return args;
}

}  // namespace

TEST(Cli, TrainGrpoWritesManifestWithZeroP) {
  const auto dir = scratch("grpo");
  const auto r = cli(with_quick({"train", "--algo", "grpo", "--env", "chain-corridor", "--seed", "1",
                                 "--out", dir.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "metrics.jsonl")), 3u);
  const json m = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("config").at("p"), "0");
  EXPECT_EQ(m.at("config").at("lambda_int"), "0");
  EXPECT_EQ(m.at("config").at("env"), "chain-corridor");
  EXPECT_TRUE(fs::exists(dir / "checkpoint" / "state.json"));
}

TEST(Cli, OutOfRangeFlagIsNamed) {
  const auto r = cli({"train", "--algo", "empo2", "--p", "1.5"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("--p"), std::string::npos) << r.err;
  const auto g = cli({"train", "--algo", "grpo", "--p", "0.5"});
  EXPECT_NE(g.code, 0);
  EXPECT_NE(g.err.find("p"), std::string::npos) << g.err;
  EXPECT_NE(cli({"train", "--set", "nonsense=1"}).code, 0);
  EXPECT_NE(cli({"bogus"}).code, 0);
}

TEST(Cli, IdenticalInvocationsMatch) {
  const auto a = scratch("same-a");
  const auto b = scratch("same-b");
  ASSERT_EQ(cli(with_quick({"train", "--seed", "4", "--out", a.string()})).code, 0);
  ASSERT_EQ(cli(with_quick({"train", "--seed", "4", "--out", b.string()})).code, 0);
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
}

TEST(Cli, ReductionToGrpo) {
  const auto a = scratch("red-a");
  const auto b = scratch("red-b");
  ASSERT_EQ(cli(with_quick({"train", "--algo", "empo2", "--p", "0", "--lambda-int", "0", "--seed", "2",
                            "--out", a.string()})).code, 0);
  ASSERT_EQ(cli(with_quick({"train", "--algo", "grpo", "--seed", "2", "--out", b.string()})).code, 0);
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
}

TEST(Cli, TrainResumeMatchesStraightRun) {
  const auto a = scratch("resume-a");
  const auto b = scratch("resume-b");
  ASSERT_EQ(cli({"train", "--iters", "5", "--set", "test_variants=5", "--seed", "6", "--out", a.string()}).code, 0);
  ASSERT_EQ(cli({"train", "--iters", "2", "--set", "test_variants=5", "--seed", "6", "--out", b.string()}).code, 0);
  const auto r = cli({"train", "--iters", "5", "--set", "test_variants=5", "--seed", "6", "--out", b.string(),
                      "--resume"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
}

TEST(Cli, AblateSweepAndResume) {
  const auto root = scratch("ablate");
  const std::vector<std::string> args = {"ablate", "--param", "p", "--values", "0,0.25,0.5,0.75",
                                         "--seeds", "1", "--iters", "2", "--set", "test_variants=5",
                                         "--out", root.string()};
  const auto r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  int metrics = 0;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.path().filename() == "metrics.jsonl") ++metrics;
  EXPECT_EQ(metrics, 4);
  const std::string summary = slurp(root / "summary.csv");
  EXPECT_EQ(count_lines(summary), 5u);
  const auto again = cli(args);
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(count_lines(again.out) - 1, 4u);  // four "skip" lines and the summary line
  EXPECT_NE(again.out.find("skip"), std::string::npos);
  EXPECT_EQ(slurp(root / "summary.csv"), summary);
}

TEST(Cli, AblateRejectsEmptySweep) {
  const auto r = cli({"ablate", "--param", "q", "--values", ""});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("--values"), std::string::npos) << r.err;
}

TEST(Cli, EvalMatchesLibrary) {
  const auto dir = scratch("eval");
  ASSERT_EQ(cli({"train", "--iters", "0", "--out", dir.string()}).code, 0);
  const auto r = cli({"eval", "--checkpoint", (dir / "checkpoint").string(), "--variants", "5-9", "--out",
                      (dir / "e.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(slurp(dir / "e.json"));
  const auto lib = evaluate(initial_params(TrainConfig{}), "lightbulb-world", {5, 6, 7, 8, 9}, EvalOptions{});
  EXPECT_EQ(j.at("returns").get<std::vector<double>>(), lib.returns);
  EXPECT_EQ(j.at("mean_return").get<double>(), lib.mean_return);
  EXPECT_TRUE(fs::exists(dir / "e.manifest.json"));
}

TEST(Cli, AdaptWritesOneRowPerTrial) {
  const auto dir = scratch("adapt");
  ASSERT_EQ(cli({"train", "--iters", "0", "--out", dir.string()}).code, 0);
  const auto r = cli({"adapt", "--checkpoint", (dir / "checkpoint").string(), "--trials", "10", "--variants",
                      "5-7", "--episodes", "1", "--out", (dir / "ad").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "ad" / "curve.csv");
  EXPECT_EQ(count_lines(csv), 11u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,mean_return,median_return,success_rate,memory_size");
  // Resuming a finished curve adds nothing.
  ASSERT_EQ(cli({"adapt", "--checkpoint", (dir / "checkpoint").string(), "--trials", "10", "--variants", "5-7",
                 "--episodes", "1", "--out", (dir / "ad").string(), "--resume"}).code, 0);
  EXPECT_EQ(slurp(dir / "ad" / "curve.csv"), csv);
}

TEST(Cli, ExportRowsPerSeries) {
  const auto dir = scratch("export");
  ASSERT_EQ(cli(with_quick({"train", "--out", dir.string()})).code, 0);
  const auto r = cli({"export", "--metrics", (dir / "metrics.jsonl").string(), "--out", (dir / "m.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(dir / "m.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,series,value");
  std::map<std::string, int> per_series;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    ++per_series[line.substr(a + 1, b - a - 1)];
  }
  ASSERT_FALSE(per_series.empty());
  for (const auto& [name, n] : per_series) EXPECT_EQ(n, 3) << name;
  EXPECT_TRUE(per_series.count("eval_mean_return"));
  EXPECT_TRUE(per_series.count("entropy"));
}

TEST(Cli, OutputRootFromEnvironment) {
  const auto root = scratch("root");
  ::setenv("EMPO2_OUT_ROOT", root.string().c_str(), 1);
  EXPECT_EQ(resolve_output("runs/x"), root / "runs/x");
  EXPECT_EQ(resolve_output("/abs/x"), fs::path("/abs/x"));
  ::unsetenv("EMPO2_OUT_ROOT");
  EXPECT_EQ(resolve_output("runs/x"), fs::path("runs/x"));
}
