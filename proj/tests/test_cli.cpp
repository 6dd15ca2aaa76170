#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "switchcount/cli.hpp"

using namespace switchcount;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "switchcount");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("switchcount_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"fit", "--model", "msnb"}).code, 2);  // --data missing
  const auto m = run({"fit", "--data", path("none.csv"), "--model", "msnb", "--method", "mle"});
  EXPECT_EQ(m.code, 2);
  EXPECT_NE(m.err.find("switching"), std::string::npos);
  const auto u = run({"fit", "--data", path("none.csv"), "--model", "zinb"});
  EXPECT_EQ(u.code, 2);
  for (const char* name : {"nb", "poisson", "zinb-tau", "zinb-gamma", "zip-tau", "zip-gamma", "msnb", "msp"})
    EXPECT_NE(u.err.find(name), std::string::npos) << name;
  EXPECT_EQ(run({"simulate", "--model", "nope"}).code, 2);
  EXPECT_EQ(run({"fit", "--data", "x", "--model", "nb", "--method", "em"}).code, 2);
}

TEST_F(CliTest, HelpSucceeds) {
  const auto h = run({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("simulate"), std::string::npos);
}

TEST_F(CliTest, RuntimeErrors) {
  EXPECT_EQ(run({"fit", "--data", path("missing.csv"), "--model", "nb"}).code, 1);
  std::ofstream(path("bad.csv")) << "segment_id,period,count\n1,1,-3\n";
  const auto r = run({"fit", "--data", path("bad.csv"), "--model", "nb", "--method", "mle"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("count"), std::string::npos);
}

TEST_F(CliTest, CompareReportsPublishedImprovement) {
  std::ofstream(path("a.json")) << R"({"schema":1,"model":"zinb-tau","evidence":{"log_ml":-2519.90}})";
  std::ofstream(path("b.json")) << R"({"schema":1,"model":"msnb","evidence":{"log_ml":-2184.21}})";
  std::ofstream(path("c.json")) << R"({"schema":1,"model":"zinb-gamma","evidence":{"log_ml":-2447.33}})";
  const auto r = run({"compare", path("a.json"), path("b.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "335.69\n");
  EXPECT_EQ(run({"compare", path("c.json"), path("b.json")}).out, "263.12\n");
  std::ofstream(path("mle.json")) << R"({"schema":1,"model":"nb","aic":10.0})";
  EXPECT_EQ(run({"compare", path("mle.json"), path("b.json")}).code, 1);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run({"simulate", "--seed", "7", "--out", path("s1")}).code, 0);
  ASSERT_EQ(run({"simulate", "--seed", "7", "--out", path("s2")}).code, 0);
  ASSERT_EQ(run({"simulate", "--seed", "8", "--out", path("s3")}).code, 0);
  const auto a = slurp(path("s1/panel.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("s2/panel.csv")));
  EXPECT_EQ(slurp(path("s1/states.csv")), slurp(path("s2/states.csv")));
  EXPECT_NE(a, slurp(path("s3/panel.csv")));
}

TEST_F(CliTest, PipelineArtifacts) {
  ASSERT_EQ(run({"simulate", "--seed", "3", "-N", "20", "-T", "4", "--out", path("d")}).code, 0);
  std::ofstream(path("cfg.json")) << R"({"mcmc":{"n_chains":2,"n_draws":600,"n_burnin":200,"thin":2}})";
  const auto f = run({"fit", "--data", path("d/panel.csv"), "--model", "msnb", "--config", path("cfg.json"),
                      "--gof-reps", "49", "--out", path("fit")});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_TRUE(fs::exists(path("fit/report.json")));
  EXPECT_TRUE(fs::exists(path("fit/draws.csv")));
  EXPECT_TRUE(fs::exists(path("fit/states_freq.csv")));

  const auto g = run({"gof", "--data", path("d/panel.csv"), "--report", path("fit/report.json"), "--reps", "49",
                      "--out", path("gof")});
  EXPECT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(fs::exists(path("gof/gof.json")));

  const auto dg = run({"diagnose", "--draws", path("fit/draws.csv"), "--out", path("diag")});
  EXPECT_EQ(dg.code, 0) << dg.err;
  const Json conv = cli::read_json(path("diag/convergence.json"));
  const Json rep = cli::read_json(path("fit/report.json"));
  EXPECT_DOUBLE_EQ(conv.at("max_psrf").get<double>(), rep.at("convergence").at("max_psrf").get<double>());

  const auto rp = run({"report", "--report", path("fit/report.json"), "--out", path("rep")});
  EXPECT_EQ(rp.code, 0) << rp.err;
  const auto hist = slurp(path("rep/histogram.csv"));
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 12);
  const auto series = slurp(path("rep/state_series.csv"));
  EXPECT_EQ(std::count(series.begin(), series.end(), '\n'), 81);

  const auto full = run({"fit", "--data", path("d/panel.csv"), "--model", "msnb", "--config", path("cfg.json"),
                         "--gof-reps", "0", "--store-states", "full", "--out", path("fit2")});
  ASSERT_EQ(full.code, 0) << full.err;
  const auto states = slurp(path("fit2/states_full.csv"));
  EXPECT_EQ(std::count(states.begin(), states.end(), '\n'), 1 + 2 * 200);

  const auto mle = run({"fit", "--data", path("d/panel.csv"), "--model", "nb", "--method", "mle",
                        "--gof-reps", "49", "--out", path("mle")});
  EXPECT_EQ(mle.code, 0) << mle.err;
  EXPECT_EQ(run({"report", "--report", path("mle/report.json"), "--out", path("rep2")}).code, 1);
}
