// hetune: search host/device work-distribution configurations with simulated
// annealing or enumeration, backed by a platform simulator or a learned
// execution-time predictor.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetune/pipeline.hpp"

namespace {

using namespace hetune;

struct GlobalOptions {
  std::string manifest;
  std::string space;
  std::string platform;
  std::string training_space;
  std::string training_csv;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<double> workload;
  std::vector<double> training_workloads;
  std::vector<int> budgets;
  std::optional<double> noise;
  std::optional<int> trees;
  std::optional<int> depth;
  std::optional<int> min_leaf;
  std::optional<double> shrinkage;
};

struct ScheduleOptions {
  std::optional<double> t0;
  std::optional<double> cooling_rate;
  std::optional<double> t_min;
  std::optional<int> iterations;
};

RunManifest build_manifest(const GlobalOptions& g) {
  RunManifest m = g.manifest.empty() ? RunManifest{} : load_manifest(g.manifest);
  if (!g.space.empty()) m.space = g.space;
  if (!g.platform.empty()) m.platform = g.platform;
  if (!g.training_space.empty()) m.training_space = g.training_space;
  if (!g.training_csv.empty()) m.training_csv = g.training_csv;
  if (!g.model.empty()) m.model = g.model;
  if (!g.out.empty()) m.out = g.out;
  if (g.seed) m.seed = *g.seed;
  if (g.seeds) m.seeds = *g.seeds;
  if (g.workload) m.workload = *g.workload;
  if (!g.training_workloads.empty()) m.training_workloads = g.training_workloads;
  if (!g.budgets.empty()) m.budgets = g.budgets;
  if (g.noise) m.noise = g.noise;
  if (g.trees) m.boosting.tree_count = *g.trees;
  if (g.depth) m.boosting.max_depth = *g.depth;
  if (g.min_leaf) m.boosting.min_samples_leaf = *g.min_leaf;
  if (g.shrinkage) m.boosting.shrinkage = *g.shrinkage;
  m.validate();
  return m;
}

AnnealSchedule build_schedule(const ScheduleOptions& s) {
  AnnealSchedule schedule;
  schedule.initial_temperature = s.t0;
  if (s.cooling_rate) schedule.cooling_rate = *s.cooling_rate;
  schedule.min_temperature = s.t_min;
  schedule.iteration_budget = s.iterations;
  return schedule;
}

void add_schedule_flags(CLI::App* cmd, ScheduleOptions& s) {
  cmd->add_option("--t0", s.t0, "Initial temperature [s] (default: initial energy)");
  cmd->add_option("--cooling-rate", s.cooling_rate,
                  "Geometric cooling rate in (0,1); ignored with --iterations");
  cmd->add_option("--t-min", s.t_min, "Stop temperature [s] (default: t0 * 1e-3)");
  cmd->add_option("--iterations", s.iterations,
                  "Iteration budget; derives the cooling rate");
}

void report(const std::vector<fs::path>& written) {
  for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Work-distribution tuning for host + accelerator platforms"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--manifest", g.manifest, "Run manifest JSON")->check(CLI::ExistingFile);
  app.add_option("--space", g.space, "Parameter space JSON");
  app.add_option("--platform", g.platform, "Platform model JSON");
  app.add_option("--training-space", g.training_space,
                 "Parameter space used for training-data generation");
  app.add_option("--training-csv", g.training_csv, "Training data CSV");
  app.add_option("--model", g.model, "Model document path");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--seeds", g.seeds, "Annealing runs per budget (compare)");
  app.add_option("--workload", g.workload, "Workload size in work units");
  app.add_option("--training-workloads", g.training_workloads,
                 "Workload sizes for training data");
  app.add_option("--budgets", g.budgets, "Iteration budgets (compare)");
  app.add_option("--noise", g.noise, "Relative measurement noise for generate");
  app.add_option("--trees", g.trees, "Boosting stages");
  app.add_option("--depth", g.depth, "Maximum tree depth");
  app.add_option("--min-leaf", g.min_leaf, "Minimum samples per leaf");
  app.add_option("--shrinkage", g.shrinkage, "Shrinkage in (0,1]");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Fraction sweep 0,10,...,100 at fixed threads");
  sweep_cmd->add_option("--host-threads", sweep.host_threads);
  sweep_cmd->add_option("--host-affinity", sweep.host_affinity);
  sweep_cmd->add_option("--device-threads", sweep.device_threads);
  sweep_cmd->add_option("--device-affinity", sweep.device_affinity);

  app.add_subcommand("generate", "Generate simulated training data");
  app.add_subcommand("train", "Split training data and fit the predictor");

  std::string group_by = "threads";
  auto* eval_cmd = app.add_subcommand("eval-model", "Prediction error on the held-out half");
  eval_cmd->add_option("--group-by", group_by, "side|threads|affinity|fraction|input_size");

  std::string method;
  ScheduleOptions run_sched;
  auto* run_cmd = app.add_subcommand("run", "Run one strategy");
  run_cmd->add_option("method", method, "em|eml|sam|saml")->required();
  add_schedule_flags(run_cmd, run_sched);

  ScheduleOptions compare_sched;
  auto* compare_cmd = app.add_subcommand("compare", "Compare all strategies over budgets");
  add_schedule_flags(compare_cmd, compare_sched);

  app.add_subcommand("report", "Budget tables from reports/comparison.csv");

  ScheduleOptions pipeline_sched;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "generate, train, eval-model, compare, report");
  add_schedule_flags(pipeline_cmd, pipeline_sched);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunManifest m = build_manifest(g);
    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "sweep") {
      sweep.workload = g.workload.value_or(m.workload);
      report(cmd_sweep(m, sweep));
    } else if (name == "generate") {
      report(cmd_generate(m));
    } else if (name == "train") {
      report(cmd_train(m));
    } else if (name == "eval-model") {
      report(cmd_eval_model(m, group_by_from_string(group_by)));
    } else if (name == "run") {
      report(cmd_run(m, method_from_string(method), build_schedule(run_sched)));
    } else if (name == "compare") {
      report(cmd_compare(m, build_schedule(compare_sched)));
    } else if (name == "report") {
      report(cmd_report(m));
    } else if (name == "pipeline") {
      report(run_pipeline(m, build_schedule(pipeline_sched), GroupBy::threads));
    }
  } catch (const std::exception& e) {
    std::cerr << "hetune: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
