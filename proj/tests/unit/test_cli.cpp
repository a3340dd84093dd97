#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "txbench/common/json.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = TXBENCH_FIXTURES_DIR;
const std::string kCli = TXBENCH_CLI_PATH;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("txbench_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args, const std::string& env = "") {
  const fs::path err = fs::temp_directory_path() / "txbench_cli_stderr.txt";
  const std::string cmd = env + " '" + kCli + "' --catalog '" + (kFixtures / "tasks.json").string() + "' " + args +
                          " 2>'" + err.string() + "'";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

txbench::Json settings(const Result& r) { return txbench::Json::parse(r.out); }

TEST(Cli, NoArgumentsIsUsageError) {
  const std::string err = (fs::temp_directory_path() / "txbench_cli_noargs.txt").string();
  const int status = std::system(("'" + kCli + "' >/dev/null 2>'" + err + "'").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(slurp(err).find("Subcommands:"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("prompt"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run("--no-such-flag data validate").code, 2);
  EXPECT_EQ(run("data").code, 2);
  EXPECT_EQ(run("prompt render").code, 2);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  const auto dir = scratch("badcfg");
  std::ofstream(dir / "c.json") << R"({"seed": 1, "sede": 2})";
  auto r = run("--config '" + (dir / "c.json").string() + "' --show-settings");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sede"), std::string::npos);
}

TEST(Cli, BadValueIsUsageError) {
  EXPECT_EQ(run("--log-level loud --show-settings").code, 2);
  EXPECT_EQ(run("--seed abc prompt render --task bbb").code, 2);
  EXPECT_EQ(run("--transport carrier-pigeon eval run --task bbb").code, 2);
}

TEST(Cli, SettingsPrecedence) {
  const auto dir = scratch("precedence");
  std::ofstream(dir / "c.json") << R"({"seed": 11, "workers": 2, "port": 9000})";
  const std::string cfg = "--config '" + (dir / "c.json").string() + "' ";

  auto s = settings(run("--show-settings"));
  EXPECT_EQ(s["seed"]["value"], "0");
  EXPECT_EQ(s["seed"]["source"], "default");

  s = settings(run(cfg + "--show-settings"));
  EXPECT_EQ(s["seed"]["value"], "11");
  EXPECT_EQ(s["port"]["source"], "config");

  s = settings(run(cfg + "--show-settings", "TXBENCH_SEED=21 TXBENCH_WORKERS=3"));
  EXPECT_EQ(s["seed"]["value"], "21");
  EXPECT_EQ(s["seed"]["source"], "env");
  EXPECT_EQ(s["workers"]["value"], "3");
  EXPECT_EQ(s["port"]["value"], "9000");

  s = settings(run(cfg + "--seed 31 --show-settings", "TXBENCH_SEED=21"));
  EXPECT_EQ(s["seed"]["value"], "31");
  EXPECT_EQ(s["seed"]["source"], "flag");
  EXPECT_EQ(s["workers"]["value"], "2");
}

TEST(Cli, GlobalFlagsAfterSubcommand) {
  auto s = settings(run("--show-settings --seed 4"));
  EXPECT_EQ(s["seed"]["value"], "4");
  auto a = run("prompt render --task bbb --shots 3 --mode random --seed 4");
  auto b = run("--seed 4 prompt render --task bbb --shots 3 --mode random");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, PromptRenderZeroShotGolden) {
  auto r = run("prompt render --task bbb --point 0 --shots 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kFixtures / "prompts" / "bbb_zero_shot.txt"));
}

TEST(Cli, PromptRenderNearestShotsMatchGoldenSet) {
  auto r = run("--json prompt render --task bbb --point 0 --shots 10");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = txbench::Json::parse(r.out);
  EXPECT_EQ(j["shot_count"], 10);
  std::ifstream in(kFixtures / "prompts" / "bbb_10_shot_smiles.txt");
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) EXPECT_NE(j["text"].get<std::string>().find("Drug SMILES: " + line + "\n"), std::string::npos) << line;
}

TEST(Cli, PromptRenderOutOfRange) {
  auto r = run("prompt render --task bbb --point 100000");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("out of range"), std::string::npos);
}

TEST(Cli, RandomShotsFollowSeed) {
  const std::string cmd = " prompt render --task bbb --shots 5 --mode random";
  auto a = run("--seed 1" + cmd);
  auto b = run("--seed 1" + cmd);
  auto c = run("--seed 2" + cmd);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, DataValidateAllTasksMatchExpectedCounts) {
  auto r = run("data validate");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("bbb\ttrain=1421\tvalid=203\ttest=406\tOK"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("MISMATCH"), std::string::npos);
  EXPECT_EQ(run("data validate --task nope").code, 2);
}

TEST(Cli, ComparePairs) {
  auto r = run("compare --pairs '" + (kFixtures / "reference_tables" / "txgemma_27b_predict_vs_txllm_m.tsv").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wins_a=46 wins_b=19 ties=1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("wilcoxon "), std::string::npos);

  auto j = txbench::Json::parse(
      run("--json compare --pairs '" + (kFixtures / "reference_tables" / "txgemma_27b_predict_vs_txllm_m.tsv").string() + "'")
          .out);
  EXPECT_EQ(j["wins_a"], 46);
  EXPECT_EQ(j["wins_b"], 19);
}

TEST(Cli, CompareTableColumns) {
  const std::string table = (kFixtures / "reference_tables" / "tdc_results.tsv").string();
  auto r = run("compare --a '" + table + ":txgemma_27b_predict' --b '" + table + ":txgemma_27b_predict'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wins_a=0 wins_b=0"), std::string::npos) << r.out;
  EXPECT_EQ(run("compare --a '" + table + "' --b '" + table + "'").code, 2);
  EXPECT_EQ(run("compare").code, 2);
}

TEST(Cli, EvalRunIsDeterministicForSeed) {
  const auto dir = scratch("eval");
  const std::string base = "--runs-dir '" + dir.string() +
                           "' --transport fixed --seed 9 eval run --task bbb --max-points 30 --resamples 200 --run-name ";
  auto a = run(base + "a");
  auto b = run(base + "b");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir / "bbb" / "a" / "records.jsonl"), slurp(dir / "bbb" / "b" / "records.jsonl"));
  auto ra = txbench::Json::parse(slurp(dir / "bbb" / "a" / "report.json"));
  auto rb = txbench::Json::parse(slurp(dir / "bbb" / "b" / "report.json"));
  EXPECT_EQ(ra["report"], rb["report"]);
  EXPECT_EQ(ra["n_points"], 30);
}

TEST(Cli, ContamScanFlagsCorpusHits) {
  const auto dir = scratch("contam");
  std::ifstream data(kFixtures / "data" / "bbb.tsv");
  std::ofstream corpus(dir / "corpus.txt");
  int written = 0;
  for (std::string line; std::getline(data, line) && written < 3;)
    if (line.rfind("test\t", 0) == 0) {
      corpus << "  " << line.substr(5, line.find('\t', 5) - 5) << "\n";
      ++written;
    }
  corpus.close();
  auto r = run("contam scan --task bbb --corpus '" + (dir / "corpus.txt").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("flagged=3/406"), std::string::npos) << r.out;
}

TEST(Cli, StatsTost) {
  const auto dir = scratch("tost");
  std::ofstream(dir / "a.txt") << "0.80\n0.82\n0.81\n0.79\n0.80\n0.83\n";
  std::ofstream(dir / "b.txt") << "0.81\n0.80\n0.82\n0.80\n0.79\n0.82\n";
  auto r = run("--json stats tost --a '" + (dir / "a.txt").string() + "' --b '" + (dir / "b.txt").string() +
               "' --delta 0.05");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = txbench::Json::parse(r.out);
  EXPECT_TRUE(j["equivalent"].get<bool>());
}

TEST(Cli, AgentReplaysScript) {
  auto r = run("--web-cassettes '" + (kFixtures / "tools").string() + "' agent run --script '" +
               (kFixtures / "agent" / "candidate_choice" / "script.json").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Thought 1: "), std::string::npos);
  EXPECT_NE(r.out.find("Final Answer: Candidate B is more preferable"), std::string::npos) << r.out;
}

TEST(Cli, BenchThroughputFixed) {
  auto r = run("--json --transport fixed --workers 2 bench throughput --duration-ms 200 --latency-ms 5");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = txbench::Json::parse(r.out);
  EXPECT_GT(j["completed"].get<int>(), 0);
  EXPECT_EQ(j["failed"], 0);
}

}  // namespace
