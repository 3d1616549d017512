#pragma once

// Parametric host+accelerator performance model. Stands in for real
// measurements: it is the "measured" evaluator, the training-data source and
// the brute-force ground truth.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hetune/config_space.hpp"
#include "hetune/error.hpp"
#include "hetune/rng.hpp"
#include "hetune/side.hpp"
#include "hetune/training_data.hpp"

namespace hetune {

/// Performance parameters of one side of the platform.
struct SideModel {
  double base_throughput = 1.0;  // work units per second at one thread
  int max_threads = 1;           // threads beyond this add no speedup
  double contention = 0.0;       // in [0, 1)
  std::map<std::string, double> affinity_factors;
  double fixed_overhead_s = 0.0;  // charged only when the side has work

  /// Scaling law n / (1 + contention * (n - 1)) with n clamped to capacity.
  double speedup(int threads) const {
    const double n = std::min(threads, max_threads);
    return n / (1.0 + contention * (n - 1.0));
  }
};

struct PlatformModel {
  SideModel host;
  SideModel device;
  double noise_rel_stddev = 0.0;

  const SideModel& side(Side s) const { return s == Side::host ? host : device; }
  bool deterministic() const { return noise_rel_stddev == 0.0; }

  void validate() const {
    for (Side s : kSides) {
      const SideModel& m = side(s);
      const std::string name(to_string(s));
      if (!(m.base_throughput > 0.0))
        throw Error("platform." + name + ": base_throughput must be positive");
      if (m.max_threads <= 0)
        throw Error("platform." + name + ": max_threads must be positive");
      if (!(m.contention >= 0.0 && m.contention < 1.0))
        throw Error("platform." + name + ": contention must lie in [0, 1)");
      if (!(m.fixed_overhead_s >= 0.0))
        throw Error("platform." + name + ": fixed_overhead_s must be >= 0");
      if (m.affinity_factors.empty())
        throw Error("platform." + name + ": affinity_factors is empty");
      for (const auto& [label, f] : m.affinity_factors)
        if (!(f > 0.0))
          throw Error("platform." + name + ": affinity factor for '" + label +
                      "' must be positive");
    }
    if (!(noise_rel_stddev >= 0.0))
      throw Error("platform: noise_rel_stddev must be >= 0");
  }
};

struct Workload {
  double size_units = 1.0;

  explicit Workload(double size) : size_units(size) {
    if (!(size > 0.0)) throw Error("workload size must be positive");
  }
};

enum class EvalSource { simulated, predicted };

inline std::string_view to_string(EvalSource s) {
  return s == EvalSource::simulated ? "simulated" : "predicted";
}

struct Evaluation {
  double t_host_s = 0.0;
  double t_device_s = 0.0;
  double energy_s = 0.0;  // max(t_host_s, t_device_s)
  EvalSource source = EvalSource::simulated;

  static Evaluation from_times(double t_host, double t_device, EvalSource src) {
    return {t_host, t_device, std::max(t_host, t_device), src};
  }
};

/// Execution time of `fraction` percent of `workload` on one side. Zero work
/// costs zero time. With noise enabled and an rng supplied, the time is
/// scaled by a median-1 lognormal factor.
inline double side_time(const PlatformModel& model, Side side, int threads,
                        const std::string& affinity, int fraction,
                        const Workload& workload, Rng* rng = nullptr) {
  const SideModel& m = model.side(side);
  auto it = m.affinity_factors.find(affinity);
  if (it == m.affinity_factors.end())
    throw Error("unknown " + std::string(to_string(side)) + " affinity '" +
                affinity + "'");
  if (fraction < 0 || fraction > 100)
    throw Error("fraction " + std::to_string(fraction) + " outside [0, 100]");
  if (threads <= 0) throw Error("thread count must be positive");
  if (fraction == 0) return 0.0;

  const double work = (fraction / 100.0) * workload.size_units;
  const double rate = m.base_throughput * m.speedup(threads) * it->second;
  double t = m.fixed_overhead_s + work / rate;
  if (rng != nullptr && model.noise_rel_stddev > 0.0)
    t *= lognormal_factor(*rng, model.noise_rel_stddev);
  return t;
}

inline Evaluation evaluate(const PlatformModel& model, const Configuration& config,
                           const Workload& workload, Rng* rng = nullptr) {
  const double th = side_time(model, Side::host, config.host_threads,
                              config.host_affinity, config.host_fraction,
                              workload, rng);
  const double td = side_time(model, Side::device, config.device_threads,
                              config.device_affinity, config.device_fraction(),
                              workload, rng);
  return Evaluation::from_times(th, td, EvalSource::simulated);
}

/// Exhaustive minimum-energy configuration; ties go to the earliest in
/// enumeration order. Requires a noise-free model.
inline std::pair<Configuration, Evaluation> brute_force_optimum(
    const PlatformModel& model, const ParameterSpace& space,
    const Workload& workload) {
  if (!model.deterministic())
    throw Error("brute-force optimum is undefined for a noisy platform model");
  std::optional<std::pair<Configuration, Evaluation>> best;
  for (const Configuration& c : enumerate(space)) {
    Evaluation e = evaluate(model, c, workload);
    if (!best || e.energy_s < best->second.energy_s) best.emplace(c, e);
  }
  return *best;
}

/// One sample per (side, workload, threads, affinity, fraction) drawn from
/// the space's lists. `fraction` is the side's own share; zero-work rows
/// are skipped since they carry no timing information.
inline std::vector<TrainingSample> generate_training_data(
    const PlatformModel& model, const ParameterSpace& space,
    const std::vector<Workload>& workloads, Rng& rng) {
  if (workloads.empty()) throw Error("training data needs at least one workload");
  std::vector<TrainingSample> out;
  for (Side side : kSides) {
    const auto& threads =
        side == Side::host ? space.host_threads() : space.device_threads();
    const auto& affinities =
        side == Side::host ? space.host_affinities() : space.device_affinities();
    for (const Workload& w : workloads)
      for (int t : threads)
        for (const std::string& a : affinities)
          for (int f : space.fractions()) {
            if (f == 0) continue;
            out.push_back({side, t, a, f, w.size_units,
                           side_time(model, side, t, a, f, w, &rng)});
          }
  }
  return out;
}

namespace detail {

inline SideModel side_model_from_json(const nlohmann::json& doc,
                                      const std::string& name) {
  if (!doc.contains(name) || !doc.at(name).is_object())
    throw Error("platform: missing object '" + name + "'");
  const auto& j = doc.at(name);
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      throw Error("platform." + name + ": missing field '" + key + "'");
    return j.at(key);
  };
  SideModel m;
  m.base_throughput = need("base_throughput").get<double>();
  m.max_threads = need("max_threads").get<int>();
  m.contention = need("contention").get<double>();
  m.affinity_factors = need("affinity_factors").get<std::map<std::string, double>>();
  m.fixed_overhead_s = need("fixed_overhead_s").get<double>();
  return m;
}

inline nlohmann::json side_model_to_json(const SideModel& m) {
  return {{"base_throughput", m.base_throughput},
          {"max_threads", m.max_threads},
          {"contention", m.contention},
          {"affinity_factors", m.affinity_factors},
          {"fixed_overhead_s", m.fixed_overhead_s}};
}

}  // namespace detail

inline PlatformModel platform_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("platform: document must be an object");
  PlatformModel model;
  try {
    model.host = detail::side_model_from_json(doc, "host");
    model.device = detail::side_model_from_json(doc, "device");
    model.noise_rel_stddev = doc.value("noise_rel_stddev", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("platform: ") + e.what());
  }
  model.validate();
  return model;
}

inline nlohmann::json platform_to_json(const PlatformModel& model) {
  return {{"host", detail::side_model_to_json(model.host)},
          {"device", detail::side_model_to_json(model.device)},
          {"noise_rel_stddev", model.noise_rel_stddev}};
}

inline PlatformModel load_platform(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("platform: ") + e.what());
  }
  return platform_from_json(doc);
}

}  // namespace hetune
