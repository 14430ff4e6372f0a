#include "app.hpp"
#include "manprox/matrix_io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace manprox;
using namespace manprox::app;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "manprox");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

// Trace lines without the timing field.
std::vector<nlohmann::json> trace_without_time(const fs::path& p) {
  std::vector<nlohmann::json> out;
  for (const auto& line : lines(slurp(p))) {
    auto j = nlohmann::json::parse(line);
    j.erase("wall_ns");
    out.push_back(j);
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("manprox_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("MANPROX_THREADS");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::vector<std::string> kSmallRandom = {"--problem", "random", "--m", "20", "--n", "60", "--mu", "0.6"};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

}  // namespace

TEST_F(Cli, RunWritesOutputsWithGoldenHeaders) {
  auto args = with({"run"}, kSmallRandom);
  args = with(args, {"--algo", "manpg,rpn-g", "--seeds", "2", "--out", path("o")});
  const Result r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = lines(slurp(dir_ / "o" / "summary.csv"));
  ASSERT_EQ(summary.size(), 3u);
  EXPECT_EQ(summary[0], "algo,n,r,mu,iter,iter_v,iter_u,f,sparsity,v_norm");
  EXPECT_EQ(summary[1].rfind("manpg,60,1,0.6,", 0), 0u) << summary[1];
  EXPECT_EQ(summary[2].rfind("rpn-g,60,1,0.6,", 0), 0u) << summary[2];

  const auto trace = trace_without_time(dir_ / "o" / "trace.jsonl");
  ASSERT_FALSE(trace.empty());
  for (const char* key : {"algo", "seed", "k", "objective", "v_norm", "alpha", "phase", "inner_iters",
                          "lin_iters", "active", "mask_hash", "used_newton", "fallback", "feasible"})
    EXPECT_TRUE(trace.front().contains(key)) << key;

  const auto diag = nlohmann::json::parse(slurp(dir_ / "o" / "diagnostics.json"));
  ASSERT_EQ(diag["runs"].size(), 2u);
  EXPECT_EQ(diag["runs"][1]["completed"], 2);
  EXPECT_EQ(diag["runs"][1]["seeds"].size(), 2u);
  EXPECT_TRUE(diag["runs"][1]["seeds"][0]["audit"]["ok"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "o" / "x_rpn-g_seed1.csv"));
  EXPECT_EQ(nlohmann::json::parse(r.out), diag);
}

TEST_F(Cli, MaxIterZero) {
  const Result r = cli(with(with({"run"}, kSmallRandom), {"--max-iter", "0", "--out", path("o")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trace = trace_without_time(dir_ / "o" / "trace.jsonl");
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_EQ(trace[0]["k"], 0);
  const auto summary = lines(slurp(dir_ / "o" / "summary.csv"));
  EXPECT_EQ(summary[1].rfind("rpn-g,60,1,0.6,0,,0,", 0), 0u) << summary[1];
}

TEST_F(Cli, DeterministicAcrossRunsAndThreadCounts) {
  const auto args = with(with({"run"}, kSmallRandom), {"--algo", "manpg,rpn-g", "--seeds", "3"});
  setenv("MANPROX_THREADS", "1", 1);
  EXPECT_EQ(thread_cap(), 1);
  ASSERT_EQ(cli(with(args, {"--out", path("a")})).code, 0);
  setenv("MANPROX_THREADS", "2", 1);
  EXPECT_EQ(thread_cap(), 2);
  ASSERT_EQ(cli(with(args, {"--out", path("b")})).code, 0);
  EXPECT_EQ(trace_without_time(dir_ / "a" / "trace.jsonl"), trace_without_time(dir_ / "b" / "trace.jsonl"));
  EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "x_manpg_seed2.csv"), slurp(dir_ / "b" / "x_manpg_seed2.csv"));
  setenv("MANPROX_THREADS", "zero", 1);
  EXPECT_EQ(thread_cap(), 1);
}

TEST_F(Cli, TomlLayering) {
  std::ofstream(path("c.toml")) << "problem = \"random\"\nm = 20\nn = 40\nmu = 0.5\nmax-iter = 7\n"
                                   "algo = \"manpg\"\nseeds = [4]\n";
  const Result r = cli({"run", "--config", path("c.toml"), "--max-iter", "3", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto spec = nlohmann::json::parse(r.out)["spec"];
  EXPECT_EQ(spec["n"], 40);
  EXPECT_EQ(spec["mu"], 0.5);
  const auto trace = trace_without_time(dir_ / "o" / "trace.jsonl");
  ASSERT_EQ(trace.size(), 4u);
  EXPECT_EQ(trace[0]["algo"], "manpg");
  EXPECT_EQ(trace[0]["seed"], 4);

  Settings low = parse_toml("n = 10\nmu = 0.1\n");
  Settings high;
  high.mu = 0.9;
  const Settings merged = merge(high, low);
  EXPECT_EQ(*merged.n, 10);
  EXPECT_EQ(*merged.mu, 0.9);
  EXPECT_THROW(parse_toml("bogus = 1\n"), ConfigError);
  std::ofstream(path("bad.toml")) << "n = \"many\"\n";
  EXPECT_EQ(cli({"run", "--config", path("bad.toml")}).code, 2);
}

TEST_F(Cli, SeedAndAlgoParsing) {
  EXPECT_EQ(parse_seeds("3"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(parse_seeds("3,7,9"), (std::vector<std::uint64_t>{3, 7, 9}));
  EXPECT_THROW(parse_seeds("x"), ConfigError);
  EXPECT_EQ(parse_algos("manpg,rpn-g"), (std::vector<std::string>{"manpg", "rpn-g"}));
  EXPECT_EQ(cli({"run", "--algo", "bogus"}).code, 2);
  EXPECT_EQ(cli({"run", "--algo", "rpn-n", "--r", "2"}).code, 2);
  EXPECT_EQ(cli({"run", "--problem", "synthetic", "--m", "12"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"run", "--bogus"}).code, 2);
  EXPECT_EQ(cli({"run", "--help"}).code, 0);
}

TEST_F(Cli, HandcraftedRatesAndCheck) {
  const Result r = cli({"run", "--problem", "handcrafted", "--algo", "rpn-n,rpn,rpn-g", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto diag = nlohmann::json::parse(r.out);
  EXPECT_EQ(diag["runs"][0]["seeds"][0]["rate"]["classification"], "linear");
  EXPECT_EQ(diag["runs"][1]["seeds"][0]["rate"]["classification"], "quadratic");
  EXPECT_EQ(diag["runs"][2]["seeds"][0]["rate"]["classification"], "quadratic");

  const Result ok = cli({"check", "--problem", "handcrafted", "--point", path("o/x_rpn-g_seed0.csv")});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_TRUE(j["rank"]["ok"].get<bool>());
  EXPECT_GT(j["second_order"]["min_eig"].get<double>(), 0.0);

  std::ofstream(path("e2.csv")) << "6,1\n0\n1\n0\n0\n0\n0\n";
  const Result bad = cli({"check", "--problem", "handcrafted", "--point", path("e2.csv")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(nlohmann::json::parse(bad.out)["pass"].get<bool>());

  std::ofstream(path("short.csv")) << "3,1\n1\n0\n0\n";
  EXPECT_EQ(cli({"check", "--problem", "handcrafted", "--point", path("short.csv")}).code, 2);
}

TEST_F(Cli, GenData) {
  ASSERT_EQ(cli({"gen-data", "--problem", "synthetic", "--m", "10", "--n", "30", "--out", path("a.bin"),
                 "--format", "bin", "--seeds", "3,4"})
                .code,
            0);
  const Mat a = read_matrix(path("a.bin"));
  EXPECT_EQ(a.rows(), 10);
  EXPECT_EQ(a.cols(), 30);
  RunSpec spec;
  spec.problem = ProblemKind::kSynthetic;
  spec.m = 10;
  spec.n = 30;
  EXPECT_EQ(a, build_data(spec, 3));
  ASSERT_EQ(cli({"gen-data", "--problem", "random", "--m", "4", "--n", "5", "--out", path("a.csv")}).code, 0);
  EXPECT_EQ(lines(slurp(path("a.csv")))[0], "4,5");
  EXPECT_EQ(cli({"gen-data", "--problem", "random"}).code, 2);

  // A data file replaces the generator.
  const Result r = cli({"run", "--data", path("a.bin"), "--r", "2", "--mu", "0.3", "--algo", "manpg",
                        "--max-iter", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["spec"]["n"], 30);
}

TEST_F(Cli, AllSeedsFailingGivesNonzeroExit) {
  const Result r = cli(with(with({"run"}, kSmallRandom), {"--algo", "rpn", "--max-iter", "1", "--seeds", "2"}));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("warm start"), std::string::npos) << r.err;
}

TEST_F(Cli, CompareTable) {
  const Result r = cli(with(with({"compare"}, kSmallRandom), {"--out", path("o")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "o" / "compare.csv"));
  EXPECT_EQ(rows[0], "algo,k,v_norm,cpu_seconds,phase");
  const auto diag = nlohmann::json::parse(r.out);
  ASSERT_EQ(diag["runs"].size(), 2u);
  std::size_t expected = 1;
  for (const auto& run : diag["runs"]) expected += run["summary"]["iter"].get<std::size_t>() + 1;
  EXPECT_EQ(rows.size(), expected);
  int manpg = 0;
  double last_time = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].rfind("manpg,", 0) != 0) continue;
    ++manpg;
    EXPECT_NE(rows[i].find(",gradient"), std::string::npos);
    const auto time = std::stod(rows[i].substr(rows[i].find(',', rows[i].find(',', 6) + 1) + 1));
    EXPECT_GE(time, last_time);
    last_time = time;
  }
  EXPECT_GT(manpg, 0);
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = MANPROX_CLI_PATH;
  EXPECT_EQ(std::system((bin + " --help > /dev/null").c_str()), 0);
  EXPECT_NE(std::system((bin + " run --algo bogus > /dev/null 2>&1").c_str()), 0);
  EXPECT_EQ(std::system((bin + " run --problem handcrafted --algo rpn-g > /dev/null").c_str()), 0);
}
