#include <string>

#include <gtest/gtest.h>

#include "bdmf/config.hpp"

using namespace bdmf;

TEST(ParseRunText, BlocksCommentsAndHyphenatedKeys) {
  const auto blocks = parse_run_text(
      "# leading comment\n"
      "[experiment]\n"
      "name = sis_rate\n"
      "model = sis   \n"
      "N-list = [50, 100, 200]\n"
      "; another comment\n"
      "\n"
      "[experiment]\n"
      "model=rlad\n");
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].line, 2u);
  EXPECT_EQ(blocks[0].entries.at("N_list").value, "[50, 100, 200]");
  EXPECT_EQ(blocks[0].entries.at("N_list").line, 5u);
  EXPECT_EQ(blocks[0].entries.at("model").value, "sis");
  EXPECT_EQ(blocks[1].entries.at("model").value, "rlad");
}

TEST(ParseRunText, ErrorsCarryLineAndKey) {
  try {
    parse_run_text("[experiment]\nN = 5\nN = 6\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.key(), "N");
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_run_text("N = 5\n"), ConfigError);
  EXPECT_THROW(parse_run_text("[other]\n"), ConfigError);
  EXPECT_THROW(parse_run_text("[experiment\n"), ConfigError);
  EXPECT_THROW(parse_run_text("[experiment]\njust words\n"), ConfigError);
  EXPECT_THROW(parse_run_text("[experiment]\n = 4\n"), ConfigError);
  EXPECT_TRUE(parse_run_text("").empty());
}

TEST(ParseRunFile, MissingFile) {
  try {
    parse_run_file("/nonexistent/run.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 0u);
  }
}

TEST(ApplySetting, ParsesEveryKey) {
  RunSettings s;
  apply_setting(s, "model", "poly");
  apply_setting(s, "g", "[0, 1, -1]");
  apply_setting(s, "h", "0 1");
  apply_setting(s, "N", "64");
  apply_setting(s, "N-list", "10,20");
  apply_setting(s, "x0", "0.3");
  apply_setting(s, "t0", "2.5");
  apply_setting(s, "grid", "1e-3");
  apply_setting(s, "tol", "1e-9");
  apply_setting(s, "M", "12");
  apply_setting(s, "r", "0.25");
  apply_setting(s, "runs", "500");
  apply_setting(s, "seed", "18446744073709551615");
  apply_setting(s, "closure", "freeze_last");
  apply_setting(s, "functions", "identity, sin");
  apply_setting(s, "beta", "+3");
  apply_setting(s, "kappa", "0.5");
  apply_setting(s, "k1max", "30");
  EXPECT_EQ(s.model.model, "poly");
  EXPECT_EQ(s.model.g, (std::vector<double>{0.0, 1.0, -1.0}));
  EXPECT_EQ(s.model.h, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(s.N, 64u);
  EXPECT_EQ(s.N_list, (std::vector<std::size_t>{10, 20}));
  EXPECT_DOUBLE_EQ(s.x0, 0.3);
  EXPECT_DOUBLE_EQ(s.grid, 1e-3);
  EXPECT_EQ(s.M, 12u);
  EXPECT_EQ(s.seed, 18446744073709551615ull);
  EXPECT_EQ(s.closure, Closure::FreezeLast);
  EXPECT_EQ(s.functions, (std::vector<std::string>{"identity", "sin"}));
  EXPECT_DOUBLE_EQ(s.model.beta, 3.0);
  EXPECT_EQ(s.model.k1max, 30.0);
}

TEST(ApplySetting, RejectsBadValues) {
  RunSettings s;
  EXPECT_THROW(apply_setting(s, "colour", "red"), ConfigError);
  EXPECT_THROW(apply_setting(s, "N", "-3"), ConfigError);
  EXPECT_THROW(apply_setting(s, "N", "0"), ConfigError);
  EXPECT_THROW(apply_setting(s, "N", "12abc"), ConfigError);
  EXPECT_THROW(apply_setting(s, "x0", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(s, "r", "1.0"), ConfigError);
  EXPECT_THROW(apply_setting(s, "t0", "0"), ConfigError);
  EXPECT_THROW(apply_setting(s, "model", "sir"), ConfigError);
  EXPECT_THROW(apply_setting(s, "closure", "none"), ConfigError);
  EXPECT_THROW(apply_setting(s, "functions", "cube"), ConfigError);
  EXPECT_THROW(apply_setting(s, "N_list", "[]"), ConfigError);
  EXPECT_THROW(apply_setting(s, "k1max", "0"), ConfigError);
}

TEST(ApplyBlock, ErrorReportsFileLine) {
  const auto blocks = parse_run_text("[experiment]\nmodel = sis\nbeta = two\n");
  RunSettings s;
  try {
    apply_block(s, blocks[0]);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.key(), "beta");
  }
}

TEST(RunSettings, Defaults) {
  const RunSettings s;
  EXPECT_EQ(s.N_list, (std::vector<std::size_t>{50, 100, 200, 400, 800}));
  EXPECT_DOUBLE_EQ(s.x0, 0.2);
  EXPECT_DOUBLE_EQ(s.t0, 5.0);
  EXPECT_DOUBLE_EQ(s.grid, 0.01);
  EXPECT_DOUBLE_EQ(s.tol, 1e-10);
  EXPECT_EQ(s.M, 10u);
  EXPECT_DOUBLE_EQ(s.r, 0.5);
}
