#pragma once

// The four search strategies: {enumeration, annealing} x {simulator
// "measurement", learned prediction}, plus the comparison against the
// exhaustive optimum and single-side baselines.
//
// Cross-method comparisons always use the noise-free simulator energy of the
// chosen configuration, never the energy a method reported for itself.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hetune/annealer.hpp"
#include "hetune/config_space.hpp"
#include "hetune/metrics.hpp"
#include "hetune/oracle_sim.hpp"
#include "hetune/predictor.hpp"

namespace hetune {

enum class Method { EM, EML, SAM, SAML };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::EM: return "EM";
    case Method::EML: return "EML";
    case Method::SAM: return "SAM";
    case Method::SAML: return "SAML";
  }
  return "?";
}

inline Method method_from_string(std::string_view text) {
  for (Method m : {Method::EM, Method::EML, Method::SAM, Method::SAML}) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return char(std::toupper(c)); });
    if (upper == to_string(m)) return m;
  }
  throw Error("unknown method '" + std::string(text) + "' (expected em|eml|sam|saml)");
}

struct StrategyResult {
  Method method = Method::EM;
  std::optional<int> budget;  // annealing iterations; unset for enumeration
  std::optional<std::uint64_t> seed;
  Configuration chosen;
  std::uint64_t evaluations_used = 0;
  double reported_energy_s = 0.0;  // under the method's own evaluator
  double true_energy_s = 0.0;      // noise-free simulator re-check
  SearchTrace trace;               // empty for enumeration
};

/// Energy predicted by the model: each side predicted from its own share.
inline Evaluation predicted_evaluation(const TreeEnsemble& model,
                                       const Configuration& c,
                                       const Workload& workload) {
  const double th = predict(model, Side::host, c.host_threads, c.host_affinity,
                            c.host_fraction, workload.size_units);
  const double td = predict(model, Side::device, c.device_threads, c.device_affinity,
                            c.device_fraction(), workload.size_units);
  return Evaluation::from_times(th, td, EvalSource::predicted);
}

namespace detail {

inline PlatformModel noise_free(PlatformModel model) {
  model.noise_rel_stddev = 0.0;
  return model;
}

}  // namespace detail

inline StrategyResult run_em(const ParameterSpace& space, const PlatformModel& platform,
                             const Workload& workload) {
  auto [best, eval] = brute_force_optimum(platform, space, workload);
  StrategyResult r;
  r.method = Method::EM;
  r.chosen = best;
  r.evaluations_used = cardinality(space);
  r.reported_energy_s = eval.energy_s;
  r.true_energy_s = eval.energy_s;
  return r;
}

/// Exhaustive scan scored by predicted energy; first-in-order wins ties.
inline StrategyResult run_eml(const ParameterSpace& space, const TreeEnsemble& model,
                              const PlatformModel& platform, const Workload& workload) {
  std::optional<std::pair<Configuration, Evaluation>> best;
  for (const Configuration& c : enumerate(space)) {
    Evaluation e = predicted_evaluation(model, c, workload);
    if (!best || e.energy_s < best->second.energy_s) best.emplace(c, e);
  }
  StrategyResult r;
  r.method = Method::EML;
  r.chosen = best->first;
  r.evaluations_used = cardinality(space);
  r.reported_energy_s = best->second.energy_s;
  r.true_energy_s = evaluate(detail::noise_free(platform), r.chosen, workload).energy_s;
  return r;
}

namespace detail {

inline StrategyResult from_anneal(Method method, AnnealResult&& a,
                                  const AnnealSchedule& schedule,
                                  const PlatformModel& platform,
                                  const Workload& workload) {
  StrategyResult r;
  r.method = method;
  r.budget = schedule.iteration_budget;
  r.chosen = a.best;
  r.evaluations_used = a.trace.size();
  r.reported_energy_s = a.best_eval.energy_s;
  r.true_energy_s = evaluate(noise_free(platform), r.chosen, workload).energy_s;
  r.trace = std::move(a.trace);
  return r;
}

}  // namespace detail

/// Annealing with the simulator as evaluator. A noisy platform is sampled
/// through `rng`, so the search sees noisy measurements.
inline StrategyResult run_sam(const ParameterSpace& space, const PlatformModel& platform,
                              const Workload& workload, const AnnealSchedule& schedule,
                              Rng& rng) {
  Rng* noise_rng = platform.deterministic() ? nullptr : &rng;
  auto result = anneal(
      space,
      [&](const Configuration& c) { return evaluate(platform, c, workload, noise_rng); },
      schedule, rng);
  return detail::from_anneal(Method::SAM, std::move(result), schedule, platform, workload);
}

inline StrategyResult run_saml(const ParameterSpace& space, const TreeEnsemble& model,
                               const PlatformModel& platform, const Workload& workload,
                               const AnnealSchedule& schedule, Rng& rng) {
  auto result = anneal(
      space,
      [&](const Configuration& c) { return predicted_evaluation(model, c, workload); },
      schedule, rng);
  return detail::from_anneal(Method::SAML, std::move(result), schedule, platform,
                             workload);
}

/// Single-side baseline using every available thread on that side: the
/// maximum thread count of the side, all work on it, best affinity.
inline std::pair<Configuration, Evaluation> baseline(const ParameterSpace& space,
                                                     const PlatformModel& platform,
                                                     const Workload& workload, Side side) {
  const PlatformModel model = detail::noise_free(platform);
  const auto& ht = space.host_threads();
  const auto& dt = space.device_threads();
  Configuration c{*std::max_element(ht.begin(), ht.end()), space.host_affinities().front(),
                  *std::max_element(dt.begin(), dt.end()),
                  space.device_affinities().front(), side == Side::host ? 100 : 0};
  const auto& affinities =
      side == Side::host ? space.host_affinities() : space.device_affinities();
  std::optional<std::pair<Configuration, Evaluation>> best;
  for (const auto& a : affinities) {
    (side == Side::host ? c.host_affinity : c.device_affinity) = a;
    Evaluation e = evaluate(model, c, workload);
    if (!best || e.energy_s < best->second.energy_s) best.emplace(c, e);
  }
  return *best;
}

struct Baselines {
  double host_only_s = 0.0;
  double device_only_s = 0.0;
};

struct ComparisonRow {
  Method method = Method::EM;
  std::optional<int> budget;
  std::optional<std::uint64_t> seed;
  double true_energy_s = 0.0;
  double abs_diff_s = 0.0;
  double pct_diff = 0.0;
  double speedup_host = 0.0;
  double speedup_device = 0.0;
  std::uint64_t evals = 0;
};

struct ComparisonReport {
  double em_energy_s = 0.0;
  Baselines baselines;
  std::vector<ComparisonRow> rows;
};

/// Differences against the EM optimum and speedups over both baselines, all
/// on true energies. `results` must contain an EM result.
inline ComparisonReport compare(std::span<const StrategyResult> results,
                                const Baselines& baselines) {
  auto em = std::find_if(results.begin(), results.end(),
                         [](const StrategyResult& r) { return r.method == Method::EM; });
  if (em == results.end()) throw Error("comparison needs an EM result");
  if (!(baselines.host_only_s > 0.0 && baselines.device_only_s > 0.0))
    throw Error("baseline energies must be positive");
  ComparisonReport report;
  report.em_energy_s = em->true_energy_s;
  report.baselines = baselines;
  for (const auto& r : results) {
    if (!(r.true_energy_s > 0.0)) throw Error("method energies must be positive");
    report.rows.push_back({r.method, r.budget, r.seed, r.true_energy_s,
                           absolute_difference(em->true_energy_s, r.true_energy_s),
                           percent_difference(em->true_energy_s, r.true_energy_s),
                           baselines.host_only_s / r.true_energy_s,
                           baselines.device_only_s / r.true_energy_s,
                           r.evaluations_used});
  }
  return report;
}

/// Mean of every numeric column per (method, budget), in (method, budget)
/// order. Seeds are dropped.
inline std::vector<ComparisonRow> aggregate(const ComparisonReport& report) {
  struct Acc {
    ComparisonRow sum;
    int n = 0;
  };
  std::map<std::pair<Method, int>, Acc> groups;
  for (const auto& row : report.rows) {
    Acc& a = groups[{row.method, row.budget.value_or(0)}];
    a.sum.method = row.method;
    a.sum.budget = row.budget;
    a.sum.true_energy_s += row.true_energy_s;
    a.sum.abs_diff_s += row.abs_diff_s;
    a.sum.pct_diff += row.pct_diff;
    a.sum.speedup_host += row.speedup_host;
    a.sum.speedup_device += row.speedup_device;
    a.sum.evals += row.evals;
    ++a.n;
  }
  std::vector<ComparisonRow> out;
  for (auto& [key, a] : groups) {
    ComparisonRow r = a.sum;
    r.true_energy_s /= a.n;
    r.abs_diff_s /= a.n;
    r.pct_diff /= a.n;
    r.speedup_host /= a.n;
    r.speedup_device /= a.n;
    r.evals /= static_cast<std::uint64_t>(a.n);
    out.push_back(r);
  }
  return out;
}

inline constexpr std::string_view kComparisonCsvHeader =
    "method,budget,true_energy_s,abs_diff_s,pct_diff,speedup_host,speedup_device,evals";

inline void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << kComparisonCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << (r.budget ? std::to_string(*r.budget) : "")
        << ',' << format_double(r.true_energy_s) << ',' << format_double(r.abs_diff_s)
        << ',' << format_double(r.pct_diff) << ',' << format_double(r.speedup_host)
        << ',' << format_double(r.speedup_device) << ',' << r.evals << '\n';
  }
}

}  // namespace hetune
