#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hetune/oracle_sim.hpp"
#include "test_support.hpp"

namespace hetune {
namespace {

SideModel ideal_side(double throughput, int max_threads = 64) {
  return SideModel{throughput, max_threads, 0.0, {{"a", 1.0}}, 0.0};
}

PlatformModel ideal_platform(double host_tp, double device_tp) {
  return PlatformModel{ideal_side(host_tp), ideal_side(device_tp), 0.0};
}

TEST(SideTime, ZeroFractionTakesNoTime) {
  const auto model = testing::reference_platform();
  EXPECT_EQ(side_time(model, Side::host, 48, "scatter", 0, Workload(200)), 0.0);
  EXPECT_EQ(side_time(model, Side::device, 240, "balanced", 0, Workload(200)), 0.0);
}

TEST(SideTime, IdealScalingHalvesTime) {
  const auto model = ideal_platform(1.0, 1.0);
  const double t1 = side_time(model, Side::host, 1, "a", 50, Workload(10));
  const double t2 = side_time(model, Side::host, 2, "a", 50, Workload(10));
  EXPECT_DOUBLE_EQ(t2, t1 / 2.0);
  EXPECT_DOUBLE_EQ(t1, 5.0);
}

TEST(SideTime, ThreadsClampAtCapacity) {
  const auto model = testing::reference_platform();
  const double at_cap = side_time(model, Side::device, 240, "scatter", 40, Workload(60));
  const double beyond = side_time(model, Side::device, 480, "scatter", 40, Workload(60));
  EXPECT_EQ(at_cap, beyond);
}

TEST(SideTime, DeterministicWithoutNoise) {
  const auto model = testing::reference_platform();
  Rng rng(1);
  const double a = side_time(model, Side::host, 12, "compact", 37, Workload(120), &rng);
  const double b = side_time(model, Side::host, 12, "compact", 37, Workload(120), &rng);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, side_time(model, Side::host, 12, "compact", 37, Workload(120)));
}

TEST(SideTime, MatchesIndependentTranscription) {
  const auto model = testing::reference_platform();
  for (int t : {2, 4, 48, 96})
    for (const char* aff : {"none", "scatter", "compact"})
      for (int f : {1, 33, 100})
        EXPECT_DOUBLE_EQ(side_time(model, Side::host, t, aff, f, Workload(60)),
                         testing::oracle_side_time(model.host, t, aff, f, 60));
}

TEST(SideTime, UnknownAffinityNamesLabelAndSide) {
  const auto model = testing::reference_platform();
  try {
    side_time(model, Side::device, 4, "none", 10, Workload(1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("none"), std::string::npos);
    EXPECT_NE(msg.find("device"), std::string::npos);
  }
}

TEST(SideTime, NoiseIsMedianOneWithRequestedSpread) {
  auto model = ideal_platform(1.0, 1.0);
  model.noise_rel_stddev = 0.03;
  Rng rng(99);
  std::vector<double> ratios;
  for (int i = 0; i < 20000; ++i)
    ratios.push_back(side_time(model, Side::host, 1, "a", 100, Workload(1), &rng));
  std::sort(ratios.begin(), ratios.end());
  EXPECT_NEAR(ratios[ratios.size() / 2], 1.0, 0.002);
  double mean = 0, sq = 0;
  for (double r : ratios) mean += r;
  mean /= double(ratios.size());
  for (double r : ratios) sq += (r - mean) * (r - mean);
  const double sd = std::sqrt(sq / double(ratios.size() - 1));
  EXPECT_NEAR(sd / mean, 0.03, 0.002);
  for (double r : ratios) EXPECT_GT(r, 0.0);
}

TEST(Evaluate, EnergyIsMaxOfSides) {
  // Host: 2 work units at rate 1 -> 2 s. Device: 3 units at rate 1 -> 3 s.
  const auto model = ideal_platform(1.0, 1.0);
  const auto e = evaluate(model, {1, "a", 1, "a", 40}, Workload(5));
  EXPECT_DOUBLE_EQ(e.t_host_s, 2.0);
  EXPECT_DOUBLE_EQ(e.t_device_s, 3.0);
  EXPECT_EQ(e.energy_s, 3.0);
  EXPECT_EQ(e.source, EvalSource::simulated);
}

TEST(Evaluate, HostOnlyEndpoint) {
  const auto model = testing::reference_platform();
  const auto e = evaluate(model, {48, "scatter", 240, "balanced", 100}, Workload(200));
  EXPECT_EQ(e.t_device_s, 0.0);
  EXPECT_EQ(e.energy_s, e.t_host_s);
}

TEST(Evaluate, BalancePointWhenDeviceTwiceAsFast) {
  // Brute force over all 101 fractions with the timing law written out:
  // host f/1, device (100-f)/2 -> minimum of max() at f = 33 (33.5 s vs 34 s at f = 34).
  int oracle_best = -1;
  double oracle_energy = 1e300;
  for (int f = 0; f <= 100; ++f) {
    const double e = std::max(f / 1.0, (100 - f) / 2.0);
    if (e < oracle_energy) {
      oracle_energy = e;
      oracle_best = f;
    }
  }
  ASSERT_EQ(oracle_best, 33);

  const auto model = ideal_platform(1.0, 2.0);
  std::vector<int> fractions(101);
  for (int f = 0; f <= 100; ++f) fractions[std::size_t(f)] = f;
  ParameterSpace space({1}, {"a"}, {1}, {"a"}, fractions);
  auto [best, eval] = brute_force_optimum(model, space, Workload(100));
  EXPECT_EQ(best.host_fraction, 33);
  EXPECT_DOUBLE_EQ(eval.energy_s, 33.5);
}

TEST(BruteForce, SingletonSpace) {
  const auto model = testing::reference_platform();
  ParameterSpace space({12}, {"scatter"}, {60}, {"compact"}, {40});
  auto [best, eval] = brute_force_optimum(model, space, Workload(60));
  EXPECT_EQ(best, (Configuration{12, "scatter", 60, "compact", 40}));
  EXPECT_EQ(eval.energy_s, evaluate(model, best, Workload(60)).energy_s);
}

TEST(BruteForce, BeatsRandomSamples) {
  const auto model = testing::reference_platform();
  const auto space = testing::reference_space();
  const Workload w(testing::kReferenceWorkload);
  auto [best, eval] = brute_force_optimum(model, space, w);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i)
    EXPECT_LE(eval.energy_s, evaluate(model, random_configuration(space, rng), w).energy_s);
}

TEST(BruteForce, ReferenceSpaceAgreesWithIndependentScan) {
  const auto model = testing::reference_platform();
  const auto space = testing::reference_space();
  for (double size : testing::reference_workloads()) {
    auto [best, eval] = brute_force_optimum(model, space, Workload(size));
    const auto oracle = testing::oracle_linear_scan(model, space, size);
    EXPECT_EQ(best, oracle.config) << "workload " << size;
    EXPECT_DOUBLE_EQ(eval.energy_s, oracle.energy);
  }
}

TEST(BruteForce, RandomSpacesAgreeWithIndependentScan) {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const auto model = testing::random_platform(rng);
    const auto space = testing::random_small_space(rng);
    const double size = 1.0 + 100.0 * uniform_unit(rng);
    auto [best, eval] = brute_force_optimum(model, space, Workload(size));
    const auto oracle = testing::oracle_linear_scan(model, space, size);
    EXPECT_EQ(best, oracle.config);
    EXPECT_DOUBLE_EQ(eval.energy_s, oracle.energy);
  }
}

TEST(BruteForce, TiesGoToFirstInEnumerationOrder) {
  // Affinity has no effect and the fraction is fixed: every configuration ties.
  PlatformModel model{SideModel{1.0, 64, 0.0, {{"x", 1.0}, {"y", 1.0}}, 0.0},
                      SideModel{1.0, 64, 0.0, {{"x", 1.0}, {"y", 1.0}}, 0.0}, 0.0};
  ParameterSpace space({4}, {"y", "x"}, {4}, {"y", "x"}, {50});
  auto [best, eval] = brute_force_optimum(model, space, Workload(10));
  EXPECT_EQ(best, (Configuration{4, "y", 4, "y", 50}));
}

TEST(BruteForce, NoisyModelIsRejected) {
  auto model = testing::reference_platform();
  model.noise_rel_stddev = 0.01;
  EXPECT_THROW(brute_force_optimum(model, testing::reference_space(), Workload(10)), Error);
}

TEST(SimulatorProperties, MonotoneInFractionAndThreads) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = testing::random_platform(rng);
    for (Side side : kSides) {
      const std::string aff = side == Side::host ? "none" : "balanced";
      for (int t : {1, 2, 8, 48, 240, 500}) {
        double prev = -1.0;
        for (int f = 0; f <= 100; ++f) {
          const double now = side_time(model, side, t, aff, f, Workload(50));
          EXPECT_GE(now, prev);
          prev = now;
        }
      }
      for (int f : {1, 50, 100}) {
        double prev = 1e300;
        for (int t = 1; t <= 300; ++t) {
          const double now = side_time(model, side, t, aff, f, Workload(50));
          EXPECT_LE(now, prev);
          prev = now;
        }
      }
    }
  }
}

TEST(SimulatorProperties, SwappingSidesMirrorsTheFraction) {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    PlatformModel model = testing::random_platform(rng);
    // Give both sides the same label set so swapped configurations are valid.
    model.host.affinity_factors = {{"p", 0.8}, {"q", 1.0}};
    model.device.affinity_factors = {{"p", 0.9}, {"q", 0.7}};
    model.host.max_threads = model.device.max_threads = 128;
    const PlatformModel swapped{model.device, model.host, 0.0};
    for (int f = 0; f <= 100; f += 7) {
      const Configuration c{8, "p", 64, "q", f};
      const Configuration mirrored{64, "q", 8, "p", 100 - f};
      EXPECT_EQ(evaluate(model, c, Workload(30)).energy_s,
                evaluate(swapped, mirrored, Workload(30)).energy_s);
    }
  }
}

TEST(TrainingData, RowCountsFollowTheSpace) {
  const auto model = testing::reference_platform();
  std::vector<int> fractions;
  for (int f = 4; f <= 100; f += 4) fractions.push_back(f);  // 25 values
  const auto d = default_space();
  ParameterSpace space(d.host_threads(), d.host_affinities(), d.device_threads(),
                       d.device_affinities(), fractions);
  std::vector<Workload> w;
  for (double s : testing::reference_workloads()) w.emplace_back(s);
  Rng rng(1);
  const auto samples = generate_training_data(model, space, w, rng);
  const auto host = std::count_if(samples.begin(), samples.end(),
                                  [](const auto& s) { return s.side == Side::host; });
  EXPECT_EQ(host, 7 * 3 * 25 * 4);
  EXPECT_EQ(std::ptrdiff_t(samples.size()) - host, 9 * 3 * 25 * 4);
}

TEST(TrainingData, ReferenceProtocolShape) {
  const auto model = testing::reference_platform();
  std::vector<Workload> w;
  for (double s : testing::reference_workloads()) w.emplace_back(s);
  Rng rng(1);
  const auto samples = generate_training_data(model, testing::reference_training_space(), w, rng);
  const auto host = std::count_if(samples.begin(), samples.end(),
                                  [](const auto& s) { return s.side == Side::host; });
  EXPECT_EQ(samples.size(), 7200u);
  EXPECT_EQ(host, 2880);
  for (const auto& s : samples) EXPECT_GT(s.time_s, 0.0);
}

TEST(TrainingData, ZeroFractionRowsAreSkipped) {
  const auto model = testing::reference_platform();
  ParameterSpace space({2}, {"none"}, {2}, {"balanced"}, {0, 50});
  Rng rng(1);
  const auto samples = generate_training_data(model, space, {Workload(10)}, rng);
  ASSERT_EQ(samples.size(), 2u);
  for (const auto& s : samples) EXPECT_EQ(s.fraction, 50);
}

TEST(TrainingData, SeededCsvIsByteIdentical) {
  auto model = testing::reference_platform();
  model.noise_rel_stddev = 0.03;
  std::vector<Workload> w = {Workload(20), Workload(200)};
  auto render = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::ostringstream out;
    write_training_csv(out, generate_training_data(model, testing::reference_training_space(), w, rng));
    return out.str();
  };
  EXPECT_EQ(render(5), render(5));
  EXPECT_NE(render(5), render(6));
}

TEST(TrainingData, CsvRoundTripAndErrors) {
  const auto model = testing::reference_platform();
  Rng rng(2);
  const auto samples =
      generate_training_data(model, ParameterSpace({2, 4}, {"none"}, {8}, {"compact"}, {10, 90}),
                             {Workload(3.5)}, rng);
  std::stringstream buf;
  write_training_csv(buf, samples);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')),
            "side,threads,affinity,fraction,input_size,time_s");
  EXPECT_EQ(read_training_csv(buf), samples);

  std::istringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_training_csv(bad_header), Error);
  std::istringstream bad_side("side,threads,affinity,fraction,input_size,time_s\nhub,2,x,10,1,1\n");
  try {
    read_training_csv(bad_side);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(PlatformJson, ReferenceLoadsAndRoundTrips) {
  const auto model = testing::reference_platform();
  EXPECT_TRUE(model.deterministic());
  const auto back = platform_from_json(platform_to_json(model));
  EXPECT_EQ(back.host.affinity_factors, model.host.affinity_factors);
  EXPECT_EQ(back.device.fixed_overhead_s, model.device.fixed_overhead_s);
}

TEST(PlatformJson, InvalidModelsAreRejected) {
  auto doc = platform_to_json(testing::reference_platform());
  auto bad = doc;
  bad["host"]["contention"] = 1.0;
  EXPECT_THROW(platform_from_json(bad), Error);
  bad = doc;
  bad["device"]["affinity_factors"]["balanced"] = 0.0;
  EXPECT_THROW(platform_from_json(bad), Error);
  bad = doc;
  bad.erase("device");
  EXPECT_THROW(platform_from_json(bad), Error);
  bad = doc;
  bad["noise_rel_stddev"] = -0.1;
  EXPECT_THROW(platform_from_json(bad), Error);
}

}  // namespace
}  // namespace hetune
