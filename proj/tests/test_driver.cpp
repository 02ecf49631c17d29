#include "rmgls/driver.hpp"
#include "rmgls/errors.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace rmgls;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rmgls_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

RunConfig small_run() {
  RunConfig c;
  c.fine_level = 6;
  c.rank = 3;
  c.cycle.coarsest_level = 4;
  c.cycle.max_cycles = 4;
  return c;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  RunConfig c;
  c.problem = ProblemKind::Nonlinear;
  c.schedule = {{3, 2}, {6, 4}};
  c.cycle.line_search.mode = WolfeMode::Weak;
  c.cycle.restriction = TangentRestriction::Injection;
  const json j = to_json(c);
  EXPECT_EQ(to_json(from_json(j)), j);
  EXPECT_EQ(j["problem"], "nonlinear");
  EXPECT_EQ(j["line_search"]["mode"], "weak");
}

TEST(Config, OverridesUseDottedKeys) {
  json j = json::object();
  apply_override(j, "cycle.nu1=3");
  apply_override(j, "problem=nonlinear");
  apply_override(j, "line_search.sigma=0.5");
  const RunConfig c = from_json(j);
  EXPECT_EQ(c.cycle.nu1, 3);
  EXPECT_EQ(c.problem, ProblemKind::Nonlinear);
  EXPECT_DOUBLE_EQ(c.cycle.line_search.sigma, 0.5);
  EXPECT_EQ(c.cycle.nu2, RunConfig{}.cycle.nu2);
  EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
}

TEST(Config, UnknownOrIllTypedKeysAreRejected) {
  EXPECT_THROW(from_json(json{{"rnak", 5}}), ConfigError);
  EXPECT_THROW(from_json(json{{"cycle", {{"nu3", 1}}}}), ConfigError);
  EXPECT_THROW(from_json(json{{"rank", "five"}}), ConfigError);
  EXPECT_THROW(from_json(json{{"problem", "heat"}}), ConfigError);
  EXPECT_THROW(from_json(json::array()), ConfigError);
}

TEST(Config, ValidationCatchesBadValues) {
  EXPECT_THROW(from_json(json{{"rank", 0}}), ConfigError);
  EXPECT_THROW(from_json(json{{"fine_level", 2}}), ConfigError);
  EXPECT_THROW(from_json(json{{"fine_level", 15}}), ConfigError);
  EXPECT_THROW(from_json(json{{"problem", "nonlinear"}, {"lambda", -1.0}}), ConfigError);
  EXPECT_THROW(from_json(json{{"workers", 0}}), ConfigError);
  EXPECT_THROW(from_json(json{{"line_search", {{"delta", 0.7}}}}), ConfigError);
  RunConfig c;
  c.fine_level = 5;
  c.cycle.coarsest_level = 5;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.validate_solve(), ConfigError);
  c.fine_level = 6;
  c.cycle.coarsest_level = 3;
  c.rank = 8;
  EXPECT_THROW(c.validate_solve(), ConfigError);
  c.rank = 7;
  EXPECT_NO_THROW(c.validate_solve());
}

TEST(Config, LoadFromFileWithOverrides) {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  write_atomically(dir / "c.json", R"({"rank": 4, "cycle": {"nu1": 2}})");
  const RunConfig c = load_config((dir / "c.json").string(), {"cycle.nu1=7"});
  EXPECT_EQ(c.rank, 4);
  EXPECT_EQ(c.cycle.nu1, 7);
  EXPECT_THROW(load_config((dir / "missing.json").string(), {}), ConfigError);
  write_atomically(dir / "broken.json", "{\"rank\": ");
  EXPECT_THROW(load_config((dir / "broken.json").string(), {}), ConfigError);
  fs::remove_all(dir);
}

TEST(Config, DefaultScheduleClimbsByFive) {
  const auto s = default_rank_schedule();
  ASSERT_EQ(s.size(), 5u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].rank, 5 * static_cast<int>(i + 1));
    EXPECT_EQ(s[i].iterations, 10);
  }
}

TEST(Driver, WriteAtomicallyLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  write_atomically(dir / "x.txt", "hello\n");
  EXPECT_EQ(slurp(dir / "x.txt"), "hello\n");
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "x.txt");
  fs::remove_all(dir);
}

TEST(Driver, SolveWritesCsvAndSummary) {
  const fs::path dir = scratch("solve");
  const RunResult r = run_solve(small_run(), dir, false);
  const auto lines = split(slurp(dir / "convergence.csv"), '\n');
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0], kConvergenceHeader);
  EXPECT_EQ(lines.size(), r.record.rows.size() + 1);
  EXPECT_EQ(split(lines[1], ',').size(), split(kConvergenceHeader, ',').size());
  const json s = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(s["command"], "solve");
  EXPECT_EQ(s["metrics"]["err_F_reference"], "oracle");
  EXPECT_FALSE(s["metrics"]["err_W"].is_null());
  EXPECT_EQ(s["config"], to_json(small_run()));
  EXPECT_EQ(s["version"].get<std::string>().rfind("rmgls ", 0), 0u);
  fs::remove_all(dir);
}

TEST(Driver, MetricColumnsAreDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_solve(small_run(), a, false);
  run_solve(small_run(), b, false);
  const auto la = split(slurp(a / "convergence.csv"), '\n'), lb = split(slurp(b / "convergence.csv"), '\n');
  ASSERT_EQ(la.size(), lb.size());
  const auto header = split(kConvergenceHeader, ',');
  const auto seconds = std::find(header.begin(), header.end(), "seconds") - header.begin();
  for (std::size_t i = 1; i < la.size(); ++i) {
    auto ca = split(la[i], ','), cb = split(lb[i], ',');
    ca.erase(ca.begin() + seconds);
    cb.erase(cb.begin() + seconds);
    EXPECT_EQ(ca, cb) << "row " << i;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Driver, InvalidRunWritesNothing) {
  const fs::path dir = scratch("invalid");
  RunConfig c = small_run();
  c.cycle.coarsest_level = 6;
  EXPECT_THROW(run_solve(c, dir, false), ConfigError);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Driver, AdaptRecordsTheSchedule) {
  const fs::path dir = scratch("adapt");
  RunConfig c = small_run();
  c.schedule = {{2, 2}, {4, 2}};
  const fs::path log = dir / "steps.csv";
  const RunResult r = run_solve(c, dir, true, log);
  EXPECT_EQ(r.summary["command"], "adapt");
  EXPECT_EQ(r.summary["schedule"].size(), 2u);
  EXPECT_EQ(r.summary["metrics"]["rank"], 4);
  EXPECT_TRUE(fs::exists(log));
  fs::remove_all(dir);
}

TEST(Driver, LsDemoWritesFiles) {
  const fs::path dir = scratch("demo");
  RunConfig c;
  c.ls_demo.n = 20;
  c.ls_demo.max_iters = 50;
  const LsDemoResult r = run_ls_demo_command(c, dir);
  EXPECT_EQ(split(slurp(dir / "ls_demo.csv"), '\n').size(), r.rows.size() + 1);
  EXPECT_EQ(json::parse(slurp(dir / "summary.json"))["command"], "ls-demo");
  fs::remove_all(dir);
}

TEST(Driver, OracleCheckPassesAndCatchesCorruption) {
  RunConfig c;
  c.fine_level = 4;
  std::ostringstream ok;
  EXPECT_EQ(run_oracle_check(c, ok), 0) << ok.str();
  EXPECT_NE(ok.str().find("all properties passed"), std::string::npos);
  c.corrupt_factors = true;
  std::ostringstream bad;
  EXPECT_EQ(run_oracle_check(c, bad), 1);
  EXPECT_NE(bad.str().find("FAIL"), std::string::npos);
  c.corrupt_factors = false;
  c.fine_level = 10;
  std::ostringstream refused;
  EXPECT_THROW(run_oracle_check(c, refused), ConfigError);
}

TEST(Driver, Presets) {
  const RunConfig base;
  const auto fig = sweep_preset("fig-convergence", base);
  ASSERT_EQ(fig.size(), 1u);
  EXPECT_EQ(fig[0].name, "l8_k5");
  EXPECT_EQ(fig[0].cfg.cycle.coarsest_level, 5);
  const auto table = sweep_preset("table-residuals", base);
  EXPECT_EQ(table.size(), 8u);
  EXPECT_EQ(table.front().name, "l7_k5");
  EXPECT_EQ(table.back().name, "l10_k10");
  EXPECT_THROW(sweep_preset("nope", base), ConfigError);
}

TEST(Driver, SweepRunsCellsOnWorkers) {
  const fs::path dir = scratch("sweep");
  std::vector<SweepCell> cells;
  for (int k : {2, 3}) {
    RunConfig c = small_run();
    c.rank = k;
    cells.push_back({"k" + std::to_string(k), c});
  }
  RunConfig broken = small_run();
  broken.cycle.coarsest_level = 6;
  cells.push_back({"broken", broken});
  std::ostringstream log;
  EXPECT_EQ(run_sweep(cells, dir, 2, log), 1);
  const auto lines = split(slurp(dir / "sweep.csv"), '\n');
  EXPECT_EQ(lines.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "k2" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "k3" / "convergence.csv"));
  EXPECT_FALSE(fs::exists(dir / "broken"));
  fs::remove_all(dir);
}
