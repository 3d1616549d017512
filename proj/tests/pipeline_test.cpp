#include <cstdlib>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "hetune/pipeline.hpp"
#include "test_support.hpp"

namespace hetune {
namespace {

/// Fresh scratch directory per test, removed afterwards.
class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("hetune_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunManifest small_manifest() const {
    RunManifest m = load_manifest(testing::reference_path("manifest.json"));
    m.out = dir_ / "out";
    m.seeds = 2;
    m.budgets = {50, 100};
    m.training_workloads = {60, 200};
    m.boosting = BoostingParams{20, 4, 5, 0.1};
    return m;
  }

  fs::path dir_;
};

int sweep_argmin_for(double workload, int host_threads) {
  return sweep_argmin(fraction_sweep(testing::reference_platform(), Workload(workload),
                                     host_threads, "scatter", 240, "balanced"));
}

TEST(Sweep, SmallWorkloadBelongsOnTheHost) { EXPECT_EQ(sweep_argmin_for(10, 48), 100); }

TEST(Sweep, LargeWorkloadAtFullHostIsShared) {
  const int f = sweep_argmin_for(200, 48);
  EXPECT_GT(f, 0);
  EXPECT_LT(f, 100);
}

TEST(Sweep, LargeWorkloadAtFewHostThreadsShiftsToDevice) {
  EXPECT_LT(sweep_argmin_for(200, 4), 50);
}

TEST(Sweep, NormalizationSpansOneToTen) {
  const auto points = fraction_sweep(testing::reference_platform(), Workload(200), 48,
                                     "scatter", 240, "balanced");
  ASSERT_EQ(points.size(), 11u);
  double lo = 1e300, hi = -1e300;
  for (const auto& p : points) {
    lo = std::min(lo, p.normalized);
    hi = std::max(hi, p.normalized);
  }
  EXPECT_EQ(lo, 1.0);
  EXPECT_EQ(hi, 10.0);
  EXPECT_EQ(points[std::size_t(sweep_argmin(points) / 10)].normalized, 1.0);
}

TEST(Sweep, SymmetricPlatformGivesSymmetricSweep) {
  PlatformModel p;
  p.host = {2.0, 64, 0.02, {{"x", 1.0}}, 0.3};
  p.device = p.host;
  const auto points = fraction_sweep(p, Workload(100), 16, "x", 16, "x");
  for (std::size_t i = 0; i < points.size(); ++i)
    EXPECT_DOUBLE_EQ(points[i].eval.energy_s, points[points.size() - 1 - i].eval.energy_s);
  EXPECT_EQ(sweep_argmin(points), 50);
}

TEST(Sweep, CsvLayout) {
  PlatformModel p;
  p.host = {1.0, 8, 0.0, {{"x", 1.0}}, 0.0};
  p.device = p.host;
  const auto csv = sweep_csv(fraction_sweep(p, Workload(100), 1, "x", 1, "x"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "host_fraction,device_fraction,t_host_s,t_device_s,energy_s,normalized");
  EXPECT_NE(csv.find("\n50,50,50,50,50,1\n"), std::string::npos);
  EXPECT_NE(csv.find("\n0,100,0,100,100,10\n"), std::string::npos);
}

TEST(Manifest, DefaultBudgetGrid) {
  EXPECT_EQ(default_budgets(),
            (std::vector<int>{250, 500, 750, 1000, 1250, 1500, 1750, 2000}));
}

TEST(Manifest, ReferenceManifestResolvesRelativePaths) {
  const auto m = load_manifest(testing::reference_path("manifest.json"));
  EXPECT_EQ(m.space, fs::path(testing::reference_path("space.json")));
  EXPECT_EQ(m.seeds, 20);
  EXPECT_EQ(m.budgets, default_budgets());
  ASSERT_TRUE(m.noise.has_value());
  EXPECT_EQ(*m.noise, 0.03);
  EXPECT_EQ(m.boosting.tree_count, 500);
  EXPECT_NO_THROW(m.validate());
}

TEST(Manifest, InvalidSettingsRejected) {
  const auto base = load_manifest(testing::reference_path("manifest.json"));
  auto m = base;
  m.seeds = 0;
  EXPECT_THROW(m.validate(), Error);
  m = base;
  m.budgets = {};
  EXPECT_THROW(m.validate(), Error);
  m = base;
  m.budgets = {100, -1};
  EXPECT_THROW(m.validate(), Error);
  m = base;
  m.workload = 0.0;
  EXPECT_THROW(m.validate(), Error);
  m = base;
  m.boosting.shrinkage = 0.0;
  EXPECT_THROW(m.validate(), Error);
  m = base;
  m.space = "/nonexistent/space.json";
  try {
    m.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/space.json"), std::string::npos);
  }
  EXPECT_THROW(manifest_from_json(nlohmann::json::array(), "."), Error);
  EXPECT_THROW(manifest_from_json(nlohmann::json{{"seeds", "many"}}, "."), Error);
}

TEST_F(ScratchDir, FailedStageRemovesItsOutputs) {
  const fs::path a = dir_ / "a.txt";
  try {
    run_stage("demo", [&](OutputSet& out) {
      out.write(a, "partial");
      ASSERT_TRUE(fs::exists(a));
      throw std::runtime_error("disk on fire");
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "stage 'demo' failed: disk on fire");
  }
  EXPECT_FALSE(fs::exists(a));
  EXPECT_FALSE(fs::exists(dir_ / "a.txt.tmp"));

  const auto written = run_stage("demo", [&](OutputSet& out) { out.write(a, "done"); });
  EXPECT_EQ(written, std::vector<fs::path>{a});
  EXPECT_EQ(read_file(a), "done");
}

TEST_F(ScratchDir, TrainWithoutDataNamesTheStage) {
  auto m = small_manifest();
  try {
    cmd_train(m);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.rfind("stage 'train' failed", 0), 0u) << msg;
    EXPECT_NE(msg.find("training.csv"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(m.model_path()));
}

TEST_F(ScratchDir, PipelineProducesReportsAndIsReproducible) {
  auto m = small_manifest();
  const auto written = run_pipeline(m, AnnealSchedule{});
  for (const char* name : {"data/training.csv", "data/train.csv", "data/eval.csv",
                           "models/model.json", "reports/model_error.csv",
                           "reports/model_error.txt", "reports/model_predictions.csv",
                           "reports/comparison.csv", "reports/comparison_runs.csv",
                           "reports/comparison.txt", "reports/baselines.csv",
                           "reports/tables.txt", "traces/SAM_b50_s1.csv",
                           "traces/SAML_b100_s2.csv"})
    EXPECT_TRUE(fs::exists(m.out / name)) << name;

  // Runs: EM, EML, then 2 budgets x 2 seeds x {SAM, SAML}.
  const std::string runs = read_file(m.reports_dir() / "comparison_runs.csv");
  EXPECT_EQ(std::count(runs.begin(), runs.end(), '\n'), 1 + 2 + 8);
  const auto rows = read_comparison_csv(m.reports_dir() / "comparison.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows.front().method, Method::EM);
  EXPECT_EQ(rows.front().pct_diff, 0.0);
  for (const auto& r : rows) EXPECT_GE(r.pct_diff, 0.0);

  const std::string first = read_file(m.reports_dir() / "comparison.csv");
  const std::string model = read_file(m.model_path());
  auto again = m;
  again.out = dir_ / "again";
  run_pipeline(again, AnnealSchedule{});
  EXPECT_EQ(read_file(again.reports_dir() / "comparison.csv"), first);
  EXPECT_EQ(read_file(again.model_path()), model);
}

TEST_F(ScratchDir, RunWritesOneRowAndTrace) {
  auto m = small_manifest();
  AnnealSchedule s;
  s.iteration_budget = 40;
  cmd_run(m, Method::SAM, s);
  const std::string csv = read_file(m.reports_dir() / "run_sam.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  const std::string trace = read_file(m.traces_dir() / "SAM_b40_s1.csv");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 42);
  EXPECT_THROW(cmd_run(m, Method::EML, s), Error);  // no model yet
}

// ---------------------------------------------------------------------------
// Command-line binary

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(HETUNE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(ScratchDir, CliRejectsBadInvocations) {
  const fs::path log = dir_ / "log.txt";
  EXPECT_NE(run_cli("", log), 0);
  EXPECT_NE(run_cli("frobnicate", log), 0);
  const std::string manifest = testing::reference_path("manifest.json");
  EXPECT_EQ(run_cli("--manifest " + manifest + " --out " + dir_.string() + " run ga", log), 1);
  EXPECT_NE(read_file(log).find("hetune: unknown method 'ga'"), std::string::npos);
  EXPECT_EQ(run_cli("--manifest " + manifest + " --seeds 0 --out " + dir_.string() + " compare",
                    log),
            1);
  EXPECT_NE(read_file(log).find("seeds must be >= 1"), std::string::npos);
}

TEST_F(ScratchDir, CliSweepAndRun) {
  const fs::path log = dir_ / "log.txt";
  const std::string common = "--manifest " + testing::reference_path("manifest.json") +
                             " --out " + dir_.string() + " --workload 10";
  ASSERT_EQ(run_cli(common + " sweep --host-threads 4", log), 0) << read_file(log);
  const std::string sweep = read_file(dir_ / "reports" / "sweep_w10_h4.csv");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 12);
  ASSERT_EQ(run_cli(common + " run sam --iterations 30 --t0 1", log), 0) << read_file(log);
  EXPECT_NE(read_file(log).find("run_sam.csv"), std::string::npos);
}

TEST_F(ScratchDir, CliPipelineSmoke) {
  const fs::path log = dir_ / "log.txt";
  const std::string args = "--manifest " + testing::reference_path("manifest.json") +
                           " --out " + (dir_ / "out").string() +
                           " --seeds 1 --budgets 50 --training-workloads 200 --trees 10"
                           " pipeline";
  ASSERT_EQ(run_cli(args, log), 0) << read_file(log);
  const std::string tables = read_file(dir_ / "out" / "reports" / "tables.txt");
  EXPECT_NE(tables.find("Percent difference vs. EM"), std::string::npos);
  EXPECT_NE(tables.find("SAML"), std::string::npos);
}

}  // namespace
}  // namespace hetune
