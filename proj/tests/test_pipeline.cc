#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / ("scrapsig_" + std::string(info->name()) + "_" +
                                          std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(SCRAPSIG_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

// All files under `root`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

fs::path corpus(const fs::path& dir) {
  auto csv = dir / "trade.csv";
  auto r = cli("synth --kind archetype --archetypes 12 --seed 3 --out " + csv.string(), dir);
  EXPECT_EQ(r.code, 0) << r.err;
  return csv;
}

const std::string kFast = " --trees 15 --anomaly-trees 30 --n-init 3 --seed 5";

}  // namespace

TEST(Cli, PipelineSucceedsAndWritesArtifacts) {
  auto dir = scratch();
  auto csv = corpus(dir);
  auto r = cli("pipeline -i " + csv.string() + " --out " + (dir / "run").string() + kFast, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"series.json", "features.csv", "segments.csv", "anomalies.csv",
                        "forest.json", "cv_report.txt", "shap_summary.csv", "forecasts.csv",
                        "watchlist.json", "watchlist.csv", "segments_scatter.svg"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "run" / "logs" / "ingest.log"));
  EXPECT_EQ(slurp(dir / "run" / "watchlist.csv").rfind("# schema_version=1 stage=watchlist", 0), 0u);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch();
  EXPECT_EQ(cli("pipeline --no-such-flag", dir).code, 2);
  auto csv = corpus(dir);
  auto bad_value = cli("pipeline -i " + csv.string() + " --k three --out " + (dir / "a").string(), dir);
  EXPECT_EQ(bad_value.code, 2);
  EXPECT_NE(bad_value.err.find("segment.k"), std::string::npos) << bad_value.err;

  std::ofstream(dir / "empty.csv") << "hs_code,year,flow,reporter,partner,value_usd,mass_kg\n";
  auto empty = cli("ingest -i " + (dir / "empty.csv").string() + " --out " + (dir / "b").string(), dir);
  EXPECT_EQ(empty.code, 1) << empty.err;

  std::ofstream(dir / "bad.ini") << "[segment]\nkay = 4\n";
  auto ini = cli("ingest -i " + csv.string() + " --config " + (dir / "bad.ini").string(), dir);
  EXPECT_EQ(ini.code, 2);
  EXPECT_NE(ini.err.find("kay"), std::string::npos) << ini.err;
}

TEST(Cli, MissingArtifactNamesFileAndStage) {
  auto dir = scratch();
  auto r = cli("segment --out " + (dir / "nothing").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("features.json"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("'features'"), std::string::npos) << r.err;
}

TEST(Cli, StagesMatchPipeline) {
  auto dir = scratch();
  auto csv = corpus(dir);
  const auto ini = dir / "run.ini";
  std::ofstream(ini) << "input = " << csv.string() << "\nseed = 5\n[segment]\nn_init = 3\n[anomaly]\nn_trees = 30\n"
                        "[forest]\nn_trees = 15\n";
  const auto whole = dir / "whole", staged = dir / "staged";
  const std::string cfg = " --config " + ini.string();
  ASSERT_EQ(cli("pipeline --out " + whole.string() + cfg, dir).code, 0);
  const std::string out = " --out " + staged.string() + cfg;
  ASSERT_EQ(cli("ingest" + out, dir).code, 0);
  for (const char* stage : {"features", "segment", "detect-anomalies", "train", "evaluate",
                            "explain", "forecast", "watchlist"}) {
    auto r = cli(std::string(stage) + out, dir);
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
  EXPECT_EQ(tree(whole), tree(staged));
}

TEST(Cli, ByteReproducibleAcrossRunsAndThreads) {
  auto dir = scratch();
  auto csv = corpus(dir);
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* threads : {"1", "1", "3"}) {
    const auto out = dir / ("run" + std::to_string(runs.size()));
    auto r = cli("pipeline -i " + csv.string() + " --threads " + threads + " --out " +
                     out.string() + kFast, dir);
    ASSERT_EQ(r.code, 0) << r.err;
    runs.push_back(tree(out));
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[0], runs[2]);
}

TEST(Cli, InjectedCodesFillTopDecile) {
  auto dir = scratch();
  const auto csv = dir / "trade.csv", labels = dir / "labels.csv", run = dir / "run";
  ASSERT_EQ(cli("synth --archetypes 32 --seed 7 --out " + csv.string() + " --labels-out " +
                    labels.string(), dir).code, 0);
  ASSERT_EQ(cli("pipeline -i " + csv.string() + " --out " + run.string(), dir).code, 0);
  std::set<std::string> injected;
  std::istringstream lab(slurp(labels));
  std::string line;
  std::getline(lab, line);
  while (std::getline(lab, line))
    if (line.ends_with(",true")) injected.insert(line.substr(0, line.find(',')));
  ASSERT_EQ(injected.size(), 12u);
  std::istringstream wl(slurp(run / "watchlist.csv"));
  std::getline(wl, line);  // metadata
  std::getline(wl, line);  // header
  std::size_t rank = 0, rows = 0, worst = 0;
  while (std::getline(wl, line)) {
    ++rows;
    rank = std::stoul(line.substr(0, line.find(',')));
    auto rest = line.substr(line.find(',') + 1);
    if (injected.count(rest.substr(0, rest.find(',')))) worst = std::max(worst, rank);
  }
  EXPECT_EQ(rows, 128u);
  EXPECT_LE(worst, (rows + 9) / 10);
}
