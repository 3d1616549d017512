#pragma once

// Simulated annealing over a ParameterSpace with a pluggable evaluator.
//
// Iteration k (1-based) proposes a neighbor at temperature T0 * (1 - rate)^k.
// Without an iteration budget the loop runs while that temperature is above
// min_temperature; with a budget N it runs exactly N iterations and the rate
// is derived so that the N-th temperature lands on min_temperature.

#include <cmath>
#include <concepts>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hetune/config_space.hpp"
#include "hetune/error.hpp"
#include "hetune/oracle_sim.hpp"
#include "hetune/rng.hpp"

namespace hetune {

/// min(1, exp((E - E') / T)); always 1 when the proposal is no worse.
inline double acceptance_probability(double current_energy, double proposed_energy,
                                     double temperature) {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (proposed_energy <= current_energy) return 1.0;
  return std::min(1.0, std::exp((current_energy - proposed_energy) / temperature));
}

/// One geometric cooling step, T * (1 - rate).
inline double cool(double temperature, double cooling_rate) {
  return temperature * (1.0 - cooling_rate);
}

/// Rate that takes `initial` to `minimum` in exactly `iterations` cools.
inline double cooling_rate_for_budget(double initial, double minimum, int iterations) {
  if (iterations <= 0) throw Error("iteration budget must be positive");
  if (!(minimum > 0.0 && minimum < initial))
    throw Error("min temperature must lie in (0, initial temperature)");
  return 1.0 - std::pow(minimum / initial, 1.0 / iterations);
}

struct AnnealSchedule {
  // Unset: the energy of the initial configuration.
  std::optional<double> initial_temperature;
  double cooling_rate = 0.005;
  // Unset: initial temperature * kDefaultMinTemperatureRatio.
  std::optional<double> min_temperature;
  std::optional<int> iteration_budget;

  static constexpr double kDefaultMinTemperatureRatio = 1e-3;
};

/// Concrete temperatures for one run after defaults are filled in.
struct ResolvedSchedule {
  double initial_temperature;
  double cooling_rate;
  double min_temperature;
  std::optional<int> iteration_budget;
};

inline ResolvedSchedule resolve_schedule(const AnnealSchedule& s, double initial_energy) {
  ResolvedSchedule r{};
  r.initial_temperature = s.initial_temperature.value_or(initial_energy);
  if (!(r.initial_temperature > 0.0))
    throw Error("initial temperature must be positive (initial energy was " +
                format_double(initial_energy) + "; pass an explicit t0)");
  r.min_temperature = s.min_temperature.value_or(
      r.initial_temperature * AnnealSchedule::kDefaultMinTemperatureRatio);
  if (!(r.min_temperature > 0.0 && r.min_temperature < r.initial_temperature))
    throw Error("min temperature must lie in (0, initial temperature)");
  r.iteration_budget = s.iteration_budget;
  if (s.iteration_budget) {
    r.cooling_rate = cooling_rate_for_budget(r.initial_temperature, r.min_temperature,
                                             *s.iteration_budget);
  } else {
    r.cooling_rate = s.cooling_rate;
  }
  if (!(r.cooling_rate > 0.0 && r.cooling_rate < 1.0))
    throw Error("cooling rate must lie in (0, 1)");
  return r;
}

/// Iteration 0 is the initial random configuration.
struct TraceRecord {
  int iteration = 0;
  Configuration proposed;
  double proposed_energy = 0.0;
  double current_energy = 0.0;  // before the acceptance decision
  double temperature = 0.0;
  bool accepted = false;
  Configuration best;
  double best_energy = 0.0;
};

using SearchTrace = std::vector<TraceRecord>;

struct AnnealResult {
  Configuration best;
  Evaluation best_eval;
  SearchTrace trace;
  ResolvedSchedule schedule;
};

template <typename F>
concept ConfigEvaluator = requires(F f, const Configuration& c) {
  { f(c) } -> std::convertible_to<Evaluation>;
};

/// Runs one annealing pass and returns the best configuration ever
/// evaluated. Every evaluator call appears in the trace.
template <ConfigEvaluator Evaluator>
AnnealResult anneal(const ParameterSpace& space, Evaluator&& evaluator,
                    const AnnealSchedule& schedule, Rng& rng) {
  auto eval = [&](const Configuration& c) -> Evaluation {
    try {
      return evaluator(c);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "evaluation failed for " << c << ": " << e.what();
      throw Error(msg.str());
    }
  };

  AnnealResult result;
  Configuration current = random_configuration(space, rng);
  Evaluation current_eval = eval(current);
  result.schedule = resolve_schedule(schedule, current_eval.energy_s);
  const ResolvedSchedule& sched = result.schedule;

  result.best = current;
  result.best_eval = current_eval;
  double temperature = sched.initial_temperature;
  result.trace.push_back({0, current, current_eval.energy_s, current_eval.energy_s,
                          temperature, true, current, current_eval.energy_s});
  if (cardinality(space) == 1) return result;  // no legal move exists

  for (int k = 1;; ++k) {
    temperature = cool(temperature, sched.cooling_rate);
    if (sched.iteration_budget ? k > *sched.iteration_budget
                               : !(temperature > sched.min_temperature))
      break;
    Configuration proposal = neighbor(space, current, rng);
    Evaluation proposal_eval = eval(proposal);
    const double e = current_eval.energy_s;
    const double e_new = proposal_eval.energy_s;
    bool accept = e_new < e;
    if (!accept) accept = uniform_unit(rng) < acceptance_probability(e, e_new, temperature);
    if (e_new < result.best_eval.energy_s) {
      result.best = proposal;
      result.best_eval = proposal_eval;
    }
    result.trace.push_back({k, proposal, e_new, e, temperature, accept, result.best,
                            result.best_eval.energy_s});
    if (accept) {
      current = std::move(proposal);
      current_eval = proposal_eval;
    }
  }
  return result;
}

/// Caches evaluations per configuration. Only meaningful for deterministic
/// evaluators; the wrapped evaluator is called once per distinct input.
template <ConfigEvaluator Evaluator>
class MemoizedEvaluator {
 public:
  explicit MemoizedEvaluator(Evaluator inner) : inner_(std::move(inner)) {}

  Evaluation operator()(const Configuration& c) {
    auto it = cache_.find(c);
    if (it != cache_.end()) return it->second;
    Evaluation e = inner_(c);
    cache_.emplace(c, e);
    return e;
  }

  std::size_t distinct_evaluations() const { return cache_.size(); }

 private:
  Evaluator inner_;
  std::map<Configuration, Evaluation> cache_;
};

inline constexpr std::string_view kTraceCsvHeader =
    "iteration,h_threads,h_aff,d_threads,d_aff,fraction,energy_s,temperature,"
    "accepted,best_energy_s";

inline void write_trace_csv(std::ostream& out, const SearchTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace) {
    out << r.iteration << ',' << r.proposed.host_threads << ','
        << r.proposed.host_affinity << ',' << r.proposed.device_threads << ','
        << r.proposed.device_affinity << ',' << r.proposed.host_fraction << ','
        << format_double(r.proposed_energy) << ',' << format_double(r.temperature)
        << ',' << (r.accepted ? 1 : 0) << ',' << format_double(r.best_energy) << '\n';
  }
}

}  // namespace hetune
