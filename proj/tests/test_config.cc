#include <gtest/gtest.h>

#include <sstream>

#include "scrapsig/config.h"
#include "scrapsig/error.h"

using namespace scrapsig;

namespace {

IniFile ini(const std::string& text) {
  std::istringstream in(text);
  return IniFile::parse(in);
}

}  // namespace

TEST(Ini, SectionsCommentsAndTopLevelKeys) {
  auto f = ini("seed = 7\n# comment\n[segment]\nk = 5 \n; other\n[risk]\nhorizon=2035\n");
  const auto& v = f.values();
  EXPECT_EQ(v.at("run.seed"), "7");
  EXPECT_EQ(v.at("segment.k"), "5");
  EXPECT_EQ(v.at("risk.horizon"), "2035");
  EXPECT_THROW(ini("[broken\n"), ConfigError);
  EXPECT_THROW(ini("no equals sign\n"), ConfigError);
}

TEST(RunConfig, FileThenFlagsOverride) {
  RunConfig c;
  c.apply(ini("[segment]\nk = 5\n[forest]\nn_trees = 50\n").values());
  c.apply({{"segment.k", "3"}});
  EXPECT_EQ(c.k, 3u);
  EXPECT_EQ(c.n_trees, 50u);
}

TEST(RunConfig, UnknownKeyAndBadValuesAreConfigErrors) {
  RunConfig c;
  EXPECT_THROW(c.apply({{"segment.kk", "3"}}), ConfigError);
  EXPECT_THROW(c.apply({{"segment.k", "three"}}), ConfigError);
  EXPECT_THROW(c.apply({{"forest.bootstrap", "maybe"}}), ConfigError);
  RunConfig d;
  d.anomaly_threshold = 1.5;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(RunConfig, PresetSetsColumnsBeforeExplicitColumns) {
  RunConfig c;
  c.apply({{"ingest.col_year", "yr"}, {"ingest.preset", "comtrade"}});
  EXPECT_EQ(c.columns.hs_code, "cmdCode");
  EXPECT_EQ(c.columns.year, "yr");
}

TEST(RunConfig, HashIgnoresOutputDirectoryAndThreads) {
  RunConfig a, b;
  b.out = "elsewhere";
  b.threads = 3;
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 43;
  EXPECT_NE(a.hash(), b.hash());
  auto m = metadata_block(a, "features");
  EXPECT_EQ(m.at("stage"), "features");
  EXPECT_EQ(m.at("config_hash"), a.hash());
  EXPECT_FALSE(m.at("config").contains("out"));
}
