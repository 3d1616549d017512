#pragma once

// Experiment pipeline behind the command-line tool: each command reads the
// run manifest, does one stage of the protocol and writes its outputs under
// <out>/{data,models,traces,reports}.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetune/annealer.hpp"
#include "hetune/config_space.hpp"
#include "hetune/error.hpp"
#include "hetune/oracle_sim.hpp"
#include "hetune/predictor.hpp"
#include "hetune/strategies.hpp"
#include "hetune/training_data.hpp"

namespace hetune {

namespace fs = std::filesystem;

inline const std::vector<int>& default_budgets() {
  static const std::vector<int> budgets = {250, 500, 750, 1000, 1250, 1500, 1750, 2000};
  return budgets;
}

namespace detail {

template <typename Loader>
auto load_json_file(const fs::path& path, const char* what, Loader loader) {
  if (path.empty()) throw Error(std::string("manifest: no ") + what + " file given");
  std::ifstream in(path);
  if (!in) throw Error(std::string("cannot open ") + what + " file '" + path.string() + "'");
  try {
    return loader(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Everything a pipeline run depends on. Relative paths in a manifest file
/// resolve against the manifest's directory.
struct RunManifest {
  fs::path space;
  fs::path platform;
  fs::path training_space;  // empty: same as `space`
  fs::path training_csv;    // empty: <out>/data/training.csv
  fs::path model;           // empty: <out>/models/model.json
  std::uint64_t seed = 1;
  int seeds = 20;
  std::vector<int> budgets = default_budgets();
  std::vector<double> training_workloads = {20.0, 60.0, 120.0, 200.0};
  double workload = 200.0;
  std::optional<double> noise;  // overrides the platform's noise for `generate`
  BoostingParams boosting;
  fs::path out = "out";

  fs::path data_dir() const { return out / "data"; }
  fs::path models_dir() const { return out / "models"; }
  fs::path traces_dir() const { return out / "traces"; }
  fs::path reports_dir() const { return out / "reports"; }

  fs::path training_csv_path() const {
    return training_csv.empty() ? data_dir() / "training.csv" : training_csv;
  }
  fs::path model_path() const {
    return model.empty() ? models_dir() / "model.json" : model;
  }
  fs::path training_space_path() const {
    return training_space.empty() ? space : training_space;
  }

  /// Checks scalar settings and that the space and platform files parse.
  void validate() const {
    if (seeds < 1) throw Error("manifest: seeds must be >= 1");
    if (budgets.empty()) throw Error("manifest: budgets list is empty");
    for (int b : budgets)
      if (b < 1) throw Error("manifest: budgets must be positive");
    if (training_workloads.empty()) throw Error("manifest: training_workloads is empty");
    for (double w : training_workloads) (void)Workload{w};
    (void)Workload{workload};
    if (noise && !(*noise >= 0.0)) throw Error("manifest: noise must be >= 0");
    boosting.validate();
    load_space_file();
    load_platform_file();
    if (!training_space.empty()) load_training_space_file();
  }

  ParameterSpace load_space_file() const { return detail::load_json_file(space, "space", load_space); }
  ParameterSpace load_training_space_file() const {
    return detail::load_json_file(training_space_path(), "training space", load_space);
  }
  PlatformModel load_platform_file() const {
    return detail::load_json_file(platform, "platform", load_platform);
  }

};

inline RunManifest manifest_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error("manifest: document must be an object");
  RunManifest m;
  auto path_field = [&](const char* key, fs::path& dst) {
    if (!doc.contains(key)) return;
    fs::path p = doc.at(key).get<std::string>();
    dst = p.is_absolute() ? p : base_dir / p;
  };
  try {
    path_field("space", m.space);
    path_field("platform", m.platform);
    path_field("training_space", m.training_space);
    path_field("training_csv", m.training_csv);
    path_field("model", m.model);
    path_field("out", m.out);
    m.seed = doc.value("seed", m.seed);
    m.seeds = doc.value("seeds", m.seeds);
    m.budgets = doc.value("budgets", m.budgets);
    m.training_workloads = doc.value("training_workloads", m.training_workloads);
    m.workload = doc.value("workload", m.workload);
    if (doc.contains("noise")) m.noise = doc.at("noise").get<double>();
    if (doc.contains("boosting")) {
      const auto& b = doc.at("boosting");
      m.boosting.tree_count = b.value("tree_count", m.boosting.tree_count);
      m.boosting.max_depth = b.value("max_depth", m.boosting.max_depth);
      m.boosting.min_samples_leaf = b.value("min_samples_leaf", m.boosting.min_samples_leaf);
      m.boosting.shrinkage = b.value("shrinkage", m.boosting.shrinkage);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest: ") + e.what());
  }
  return m;
}

inline RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return manifest_from_json(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Output handling

/// Writes files via temp-then-rename and remembers them, so a failing
/// command can remove what it already produced.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  void write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write '" + tmp.string() + "'");
      out << content;
      if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
    written_.push_back(path);
  }

  void commit() { committed_ = true; }
  const std::vector<fs::path>& written() const { return written_; }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

/// Runs one stage; failures are reported with the stage name and the
/// stage's partial outputs are removed.
template <typename Body>
std::vector<fs::path> run_stage(const std::string& stage, Body&& body) {
  OutputSet outputs;
  try {
    body(outputs);
  } catch (const std::exception& e) {
    throw Error("stage '" + stage + "' failed: " + e.what());
  }
  outputs.commit();
  return outputs.written();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Left-aligned first column, right-aligned rest.
inline std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << "  ";
      if (i == 0)
        out << std::left << std::setw(int(width[i])) << row[i];
      else
        out << std::right << std::setw(int(width[i])) << row[i];
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Fraction sweep

struct SweepPoint {
  int host_fraction = 0;
  Evaluation eval;
  double normalized = 1.0;  // energy mapped affinely onto [1, 10]
};

/// Evaluates host fractions 0, 10, ..., 100 at fixed thread settings.
inline std::vector<SweepPoint> fraction_sweep(const PlatformModel& model,
                                              const Workload& workload,
                                              int host_threads,
                                              const std::string& host_affinity,
                                              int device_threads,
                                              const std::string& device_affinity) {
  std::vector<SweepPoint> points;
  for (int f = 0; f <= 100; f += 10) {
    Configuration c{host_threads, host_affinity, device_threads, device_affinity, f};
    points.push_back({f, evaluate(model, c, workload), 1.0});
  }
  auto [lo, hi] = std::minmax_element(
      points.begin(), points.end(),
      [](const SweepPoint& a, const SweepPoint& b) { return a.eval.energy_s < b.eval.energy_s; });
  const double min_e = lo->eval.energy_s;
  const double span = hi->eval.energy_s - min_e;
  for (auto& p : points)
    p.normalized = span > 0.0 ? 1.0 + 9.0 * (p.eval.energy_s - min_e) / span : 1.0;
  return points;
}

/// Host fraction of the first minimum-energy sweep point.
inline int sweep_argmin(const std::vector<SweepPoint>& points) {
  return std::min_element(points.begin(), points.end(),
                          [](const SweepPoint& a, const SweepPoint& b) {
                            return a.eval.energy_s < b.eval.energy_s;
                          })
      ->host_fraction;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "host_fraction,device_fraction,t_host_s,t_device_s,energy_s,normalized\n";
  for (const auto& p : points)
    out << p.host_fraction << ',' << 100 - p.host_fraction << ','
        << format_double(p.eval.t_host_s) << ',' << format_double(p.eval.t_device_s) << ','
        << format_double(p.eval.energy_s) << ',' << format_double(p.normalized) << '\n';
  return out.str();
}

struct SweepOptions {
  double workload = 200.0;
  int host_threads = 48;
  std::string host_affinity = "scatter";
  int device_threads = 240;
  std::string device_affinity = "balanced";
};

inline std::vector<fs::path> cmd_sweep(const RunManifest& m, const SweepOptions& opt) {
  return run_stage("sweep", [&](OutputSet& out) {
    PlatformModel model = m.load_platform_file();
    model.noise_rel_stddev = 0.0;
    auto points = fraction_sweep(model, Workload(opt.workload), opt.host_threads,
                                 opt.host_affinity, opt.device_threads, opt.device_affinity);
    std::ostringstream name;
    name << "sweep_w" << format_double(opt.workload) << "_h" << opt.host_threads << ".csv";
    out.write(m.reports_dir() / name.str(), sweep_csv(points));
  });
}

// ---------------------------------------------------------------------------
// Predictor stages

inline std::vector<TrainingSample> read_training_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open training data '" + path.string() + "'");
  try {
    return read_training_csv(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline std::string training_csv_text(const std::vector<TrainingSample>& samples) {
  std::ostringstream out;
  write_training_csv(out, samples);
  return out.str();
}

inline std::vector<fs::path> cmd_generate(const RunManifest& m) {
  return run_stage("generate", [&](OutputSet& out) {
    PlatformModel model = m.load_platform_file();
    if (m.noise) model.noise_rel_stddev = *m.noise;
    const ParameterSpace space = m.load_training_space_file();
    std::vector<Workload> workloads;
    for (double w : m.training_workloads) workloads.emplace_back(w);
    Rng rng(m.seed);
    auto samples = generate_training_data(model, space, workloads, rng);
    out.write(m.data_dir() / "training.csv", training_csv_text(samples));
  });
}

/// Splits the training data half/half, fits on the first half, and keeps
/// both halves next to the model.
inline std::vector<fs::path> cmd_train(const RunManifest& m) {
  return run_stage("train", [&](OutputSet& out) {
    auto samples = read_training_file(m.training_csv_path());
    Rng rng(m.seed);
    auto [train_set, eval_set] = split_train_eval(samples, rng);
    TreeEnsemble model = train(train_set, m.boosting);
    out.write(m.data_dir() / "train.csv", training_csv_text(train_set));
    out.write(m.data_dir() / "eval.csv", training_csv_text(eval_set));
    std::ostringstream doc;
    save_model(doc, model);
    out.write(m.model_path(), doc.str());
  });
}

inline TreeEnsemble read_model_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model '" + path.string() + "'");
  try {
    return load_model(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

/// Per-side accuracy tables grouped by `group_by`, plus raw predictions.
inline std::vector<fs::path> cmd_eval_model(const RunManifest& m, GroupBy group_by) {
  return run_stage("eval-model", [&](OutputSet& out) {
    const TreeEnsemble model = read_model_file(m.model_path());
    const auto samples = read_training_file(m.data_dir() / "eval.csv");
    std::ostringstream csv, preds, text;
    csv << "side," << to_string(group_by)
        << ",count,mean_abs_error_s,mean_pct_error\n";
    preds << "side,threads,affinity,fraction,input_size,measured_s,predicted_s,"
             "abs_error_s,pct_error\n";
    auto emit = [&](const std::string& side, const ErrorReport& rep) {
      std::vector<std::vector<std::string>> table = {
          {std::string(to_string(group_by)), "n", "absolute [s]", "percent [%]"}};
      for (const auto* g : [&] {
             std::vector<const ErrorSummary*> all;
             for (const auto& s : rep.groups) all.push_back(&s);
             all.push_back(&rep.overall);
             return all;
           }()) {
        csv << side << ',' << g->group << ',' << g->count << ','
            << format_double(g->mean_absolute_error_s) << ','
            << format_double(g->mean_percent_error) << '\n';
        table.push_back({g->group, std::to_string(g->count),
                         format_fixed(g->mean_absolute_error_s, 3),
                         format_fixed(g->mean_percent_error, 3)});
      }
      text << "Prediction accuracy (" << side << ")\n" << format_table(table) << '\n';
    };
    for (Side side : kSides) {
      std::vector<TrainingSample> subset;
      std::copy_if(samples.begin(), samples.end(), std::back_inserter(subset),
                   [side](const TrainingSample& s) { return s.side == side; });
      if (subset.empty()) continue;
      emit(std::string(to_string(side)), evaluate_model(model, subset, group_by));
    }
    const ErrorReport all = evaluate_model(model, samples, group_by);
    csv << "all,all," << all.overall.count << ','
        << format_double(all.overall.mean_absolute_error_s) << ','
        << format_double(all.overall.mean_percent_error) << '\n';
    for (const auto& r : all.records)
      preds << to_string(r.sample.side) << ',' << r.sample.threads << ','
            << r.sample.affinity << ',' << r.sample.fraction << ','
            << format_double(r.sample.input_size) << ',' << format_double(r.sample.time_s)
            << ',' << format_double(r.predicted_s) << ','
            << format_double(r.absolute_error_s) << ',' << format_double(r.percent_error)
            << '\n';
    text << "overall percent error: " << format_fixed(all.overall.mean_percent_error, 3)
         << " %\n";
    out.write(m.reports_dir() / "model_error.csv", csv.str());
    out.write(m.reports_dir() / "model_error.txt", text.str());
    out.write(m.reports_dir() / "model_predictions.csv", preds.str());
  });
}

// ---------------------------------------------------------------------------
// Strategy stages

inline std::string run_csv(const std::vector<StrategyResult>& results) {
  std::ostringstream out;
  out << "method,budget,seed,h_threads,h_aff,d_threads,d_aff,fraction,"
         "reported_energy_s,true_energy_s,evals\n";
  for (const auto& r : results)
    out << to_string(r.method) << ',' << (r.budget ? std::to_string(*r.budget) : "") << ','
        << (r.seed ? std::to_string(*r.seed) : "") << ',' << r.chosen.host_threads << ','
        << r.chosen.host_affinity << ',' << r.chosen.device_threads << ','
        << r.chosen.device_affinity << ',' << r.chosen.host_fraction << ','
        << format_double(r.reported_energy_s) << ',' << format_double(r.true_energy_s)
        << ',' << r.evaluations_used << '\n';
  return out.str();
}

inline std::string trace_file_name(const StrategyResult& r) {
  std::ostringstream name;
  name << to_string(r.method) << "_b" << r.budget.value_or(0) << "_s" << r.seed.value_or(0)
       << ".csv";
  return name.str();
}

inline std::string trace_csv_text(const SearchTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

/// Runs one strategy. Annealing methods use `schedule`; their trace goes to
/// traces/.
inline std::vector<fs::path> cmd_run(const RunManifest& m, Method method,
                                     const AnnealSchedule& schedule) {
  return run_stage("run " + std::string(to_string(method)), [&](OutputSet& out) {
    const ParameterSpace space = m.load_space_file();
    const PlatformModel platform = m.load_platform_file();
    const Workload workload(m.workload);
    StrategyResult r;
    Rng rng(m.seed);
    switch (method) {
      case Method::EM: r = run_em(space, platform, workload); break;
      case Method::EML:
        r = run_eml(space, read_model_file(m.model_path()), platform, workload);
        break;
      case Method::SAM: r = run_sam(space, platform, workload, schedule, rng); break;
      case Method::SAML:
        r = run_saml(space, read_model_file(m.model_path()), platform, workload, schedule,
                     rng);
        break;
    }
    if (method == Method::SAM || method == Method::SAML) {
      r.seed = m.seed;
      out.write(m.traces_dir() / trace_file_name(r), trace_csv_text(r.trace));
    }
    std::string name = "run_" + std::string(to_string(method)) + ".csv";
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    out.write(m.reports_dir() / name, run_csv({r}));
  });
}

/// Runs EM, EML and, for every budget and seed, SAM and SAML; writes the
/// per-run rows, the per-(method, budget) means and an aligned table.
/// Annealing run i uses seed `m.seed + i`.
inline std::vector<fs::path> cmd_compare(const RunManifest& m, AnnealSchedule schedule) {
  return run_stage("compare", [&](OutputSet& out) {
    const ParameterSpace space = m.load_space_file();
    PlatformModel platform = m.load_platform_file();
    const Workload workload(m.workload);
    const TreeEnsemble model = read_model_file(m.model_path());

    std::vector<StrategyResult> results;
    results.push_back(run_em(space, platform, workload));
    results.push_back(run_eml(space, model, platform, workload));
    for (int budget : m.budgets) {
      schedule.iteration_budget = budget;
      for (int i = 0; i < m.seeds; ++i) {
        const std::uint64_t seed = m.seed + std::uint64_t(i);
        Rng sam_rng(seed), saml_rng(seed);
        StrategyResult sam = run_sam(space, platform, workload, schedule, sam_rng);
        StrategyResult saml = run_saml(space, model, platform, workload, schedule, saml_rng);
        for (StrategyResult* r : {&sam, &saml}) {
          r->seed = seed;
          out.write(m.traces_dir() / trace_file_name(*r), trace_csv_text(r->trace));
          r->trace.clear();
          results.push_back(std::move(*r));
        }
      }
    }

    const Baselines base{baseline(space, platform, workload, Side::host).second.energy_s,
                         baseline(space, platform, workload, Side::device).second.energy_s};
    const ComparisonReport report = compare(results, base);

    std::ostringstream runs;
    runs << "method,budget,seed,true_energy_s,abs_diff_s,pct_diff,speedup_host,"
            "speedup_device,evals\n";
    for (const auto& r : report.rows)
      runs << to_string(r.method) << ',' << (r.budget ? std::to_string(*r.budget) : "")
           << ',' << (r.seed ? std::to_string(*r.seed) : "") << ','
           << format_double(r.true_energy_s) << ',' << format_double(r.abs_diff_s) << ','
           << format_double(r.pct_diff) << ',' << format_double(r.speedup_host) << ','
           << format_double(r.speedup_device) << ',' << r.evals << '\n';

    const auto rows = aggregate(report);
    std::ostringstream csv;
    write_comparison_csv(csv, rows);

    std::vector<std::vector<std::string>> table = {
        {"method", "budget", "time [s]", "abs diff [s]", "pct diff [%]", "vs host",
         "vs device", "evals"}};
    for (const auto& r : rows)
      table.push_back({std::string(to_string(r.method)),
                       r.budget ? std::to_string(*r.budget) : "-",
                       format_fixed(r.true_energy_s, 4), format_fixed(r.abs_diff_s, 4),
                       format_fixed(r.pct_diff, 3), format_fixed(r.speedup_host, 3),
                       format_fixed(r.speedup_device, 3), std::to_string(r.evals)});
    std::ostringstream text;
    text << "workload " << format_double(m.workload) << ", " << m.seeds
         << " seeds per budget, means over seeds\n"
         << "host-only baseline " << format_fixed(base.host_only_s, 4)
         << " s, device-only baseline " << format_fixed(base.device_only_s, 4) << " s\n\n"
         << format_table(table);

    std::ostringstream baselines;
    baselines << "side,true_energy_s\nhost," << format_double(base.host_only_s)
              << "\ndevice," << format_double(base.device_only_s) << '\n';

    out.write(m.reports_dir() / "comparison_runs.csv", runs.str());
    out.write(m.reports_dir() / "comparison.csv", csv.str());
    out.write(m.reports_dir() / "comparison.txt", text.str());
    out.write(m.reports_dir() / "baselines.csv", baselines.str());
  });
}

inline std::vector<ComparisonRow> read_comparison_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != kComparisonCsvHeader)
    throw Error(path.string() + ": unexpected comparison header");
  std::vector<ComparisonRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) throw Error(where + ": expected 8 columns");
    ComparisonRow r;
    r.method = method_from_string(cells[0]);
    if (!cells[1].empty()) r.budget = detail::parse_number<int>(cells[1], where);
    r.true_energy_s = detail::parse_number<double>(cells[2], where);
    r.abs_diff_s = detail::parse_number<double>(cells[3], where);
    r.pct_diff = detail::parse_number<double>(cells[4], where);
    r.speedup_host = detail::parse_number<double>(cells[5], where);
    r.speedup_device = detail::parse_number<double>(cells[6], where);
    r.evals = detail::parse_number<std::uint64_t>(cells[7], where);
    rows.push_back(r);
  }
  return rows;
}

/// Budget-indexed tables (percent difference, absolute difference, speedup
/// over each baseline) rebuilt from reports/comparison.csv.
inline std::string budget_tables(const std::vector<ComparisonRow>& rows) {
  std::vector<int> budgets;
  for (const auto& r : rows)
    if (r.budget && std::find(budgets.begin(), budgets.end(), *r.budget) == budgets.end())
      budgets.push_back(*r.budget);
  std::sort(budgets.begin(), budgets.end());

  auto value_at = [&](Method method, std::optional<int> budget, auto field) -> std::string {
    for (const auto& r : rows)
      if (r.method == method && (!budget || r.budget == budget)) return field(r);
    return "-";
  };

  struct Metric {
    const char* title;
    std::string (*field)(const ComparisonRow&);
  };
  const Metric metrics[] = {
      {"Percent difference vs. EM [%]",
       [](const ComparisonRow& r) { return format_fixed(r.pct_diff, 3); }},
      {"Absolute difference vs. EM [s]",
       [](const ComparisonRow& r) { return format_fixed(r.abs_diff_s, 4); }},
      {"Speedup vs. host-only",
       [](const ComparisonRow& r) { return format_fixed(r.speedup_host, 3); }},
      {"Speedup vs. device-only",
       [](const ComparisonRow& r) { return format_fixed(r.speedup_device, 3); }},
  };

  std::ostringstream out;
  for (const auto& metric : metrics) {
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header = {"method"};
    for (int b : budgets) header.push_back(std::to_string(b));
    table.push_back(header);
    for (Method method : {Method::SAM, Method::SAML}) {
      std::vector<std::string> row = {std::string(to_string(method))};
      for (int b : budgets) row.push_back(value_at(method, b, metric.field));
      table.push_back(row);
    }
    for (Method method : {Method::EM, Method::EML}) {
      std::vector<std::string> row = {std::string(to_string(method))};
      for (std::size_t i = 0; i < budgets.size(); ++i)
        row.push_back(value_at(method, std::nullopt, metric.field));
      table.push_back(row);
    }
    out << metric.title << '\n' << format_table(table) << '\n';
  }
  return out.str();
}

inline std::vector<fs::path> cmd_report(const RunManifest& m) {
  return run_stage("report", [&](OutputSet& out) {
    const auto rows = read_comparison_csv(m.reports_dir() / "comparison.csv");
    out.write(m.reports_dir() / "tables.txt", budget_tables(rows));
  });
}

/// generate, train, eval-model, compare and report in order.
inline std::vector<fs::path> run_pipeline(const RunManifest& m, const AnnealSchedule& schedule,
                                          GroupBy group_by = GroupBy::threads) {
  m.validate();
  std::vector<fs::path> all;
  auto add = [&all](std::vector<fs::path> part) {
    all.insert(all.end(), part.begin(), part.end());
  };
  if (m.training_csv.empty()) add(cmd_generate(m));
  add(cmd_train(m));
  add(cmd_eval_model(m, group_by));
  add(cmd_compare(m, schedule));
  add(cmd_report(m));
  return all;
}

}  // namespace hetune
