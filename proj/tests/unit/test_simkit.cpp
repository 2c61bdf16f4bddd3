#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <vector>

#include "cogalloc/error.hpp"
#include "cogalloc/simkit.hpp"

using namespace cogalloc;

namespace {

SimulationSetup small_setup(std::size_t m = 4) {
  SimulationSetup s;
  s.params = SystemParams{};
  s.params.gamma_db = -3.0;
  for (std::size_t i = 0; i < m; ++i) {
    s.users.push_back({static_cast<std::uint32_t>(i), 0.1, 10.0, 1.0});
  }
  return s;
}

}  // namespace

TEST(Traffic, ParetoAtUnitUniformIsScale) {
  TrafficModel t;
  t.shape = 1.5;
  t.scale = 0.02;
  EXPECT_DOUBLE_EQ(pareto_from_uniform(t, 1.0), 0.02);
  EXPECT_GT(pareto_from_uniform(t, 0.5), 0.02);
}

TEST(Traffic, ParetoMeanWithFiniteMoment) {
  TrafficModel t;
  t.shape = 2.0;
  t.scale = 1.0;
  Pcg32 rng(11, 3);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += sample_pareto_idle(t, rng);
  // Variance is infinite at shape 2, so the tolerance is loose.
  EXPECT_NEAR(sum / n, 2.0, 0.02);
}

TEST(Traffic, ParetoHeavyTailAtUnitShape) {
  TrafficModel t;
  Pcg32 rng(5, 9);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += sample_pareto_idle(t, rng);
  EXPECT_GT(sum / n, 5.0 * t.scale);
}

TEST(Traffic, Validate) {
  TrafficModel t;
  EXPECT_NO_THROW(t.validate());
  t.shape = 0.0;
  EXPECT_THROW(t.validate(), DomainError);
  t = {};
  t.scale = -1.0;
  EXPECT_THROW(t.validate(), DomainError);
  t = {};
  t.accumulation_time = -1e-3;
  EXPECT_THROW(t.validate(), DomainError);
}

TEST(Gain, ExponentialInverse) {
  EXPECT_DOUBLE_EQ(exponential_from_uniform(2.0, 1.0), 0.0);
  EXPECT_NEAR(exponential_from_uniform(2.0, std::exp(-1.0)), 2.0, 1e-15);
  EXPECT_THROW(exponential_from_uniform(0.0, 0.5), DomainError);
}

TEST(Gain, ExponentialMeanAndMemoryless) {
  Pcg32 rng(3, 1);
  const int n = 1'000'000;
  double sum = 0.0;
  int over1 = 0;
  int over2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_exponential_gain(0.5, rng);
    sum += x;
    over1 += x > 0.5 ? 1 : 0;
    over2 += x > 1.0 ? 1 : 0;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  // P(X > 2s | X > s) = P(X > s)
  EXPECT_NEAR(static_cast<double>(over2) / over1, static_cast<double>(over1) / n, 0.005);
}

TEST(Buffer, FifoDrainAndCompletion) {
  BufferState b;
  b.push(0.1, 10);
  b.push(0.2, 5);
  b.push(0.3, 0);
  EXPECT_EQ(b.bits(), 15u);
  EXPECT_EQ(b.pending().size(), 2u);

  std::vector<double> done;
  auto record = [&](double a) { done.push_back(a); };
  EXPECT_EQ(b.drain(7, record), 7u);
  EXPECT_TRUE(done.empty());
  EXPECT_EQ(b.pending().front().remaining, 3u);

  EXPECT_EQ(b.drain(4, record), 4u);
  ASSERT_EQ(done.size(), 1u);
  EXPECT_DOUBLE_EQ(done[0], 0.1);
  EXPECT_EQ(b.bits(), 4u);

  EXPECT_EQ(b.drain(100, record), 4u);
  ASSERT_EQ(done.size(), 2u);
  EXPECT_DOUBLE_EQ(done[1], 0.2);
  EXPECT_EQ(b.bits(), 0u);
  EXPECT_EQ(b.drain(100, record), 0u);
}

TEST(Setup, Validate) {
  SimulationSetup s = small_setup();
  EXPECT_NO_THROW(s.validate());
  s.users.clear();
  EXPECT_THROW(s.validate(), DomainError);
  s = small_setup();
  s.users[1].gain_mean = 0.0;
  EXPECT_THROW(s.validate(), DomainError);
  s = small_setup();
  s.sensing_gain_mean = 0.0;
  EXPECT_THROW(s.validate(), DomainError);
  EXPECT_THROW(run_episode(0, small_setup(), 1), DomainError);
}

TEST(Frame, ConservationAndAccess) {
  SimulationSetup s = small_setup(5);
  s.traffic.scale = 2e-3;
  FrameStreams streams = FrameStreams::derive(21, 0, s.users.size());
  EpisodeState state = EpisodeState::initial(s, streams);
  int idle_frames = 0;
  int busy_frames = 0;
  for (int n = 0; n < 400; ++n) {
    const FrameTrace f = step_frame(state, s, streams);
    EXPECT_EQ(f.frame_index, static_cast<std::uint64_t>(n));
    for (std::size_t i = 0; i < s.users.size(); ++i) {
      EXPECT_EQ(f.bits_after[i], f.bits_before[i] + f.bits_in[i] - f.bits_out[i]);
      EXPECT_LE(f.bits_out[i], f.bits_before[i] + f.bits_in[i]);
    }
    if (!f.fc_idle) {
      ++busy_frames;
      EXPECT_EQ(f.rate_hypothesis, -1);
      for (auto out : f.bits_out) EXPECT_EQ(out, 0u);
    } else {
      ++idle_frames;
      EXPECT_EQ(f.rate_hypothesis, f.pu_active ? 1 : 0);
      int busy_votes = 0;
      for (std::size_t i : f.selected) busy_votes += f.local_votes[i] ? 1 : 0;
      EXPECT_LT(busy_votes, f.k);
      for (std::size_t i = 0; i < s.users.size(); ++i) {
        const bool chosen =
            std::find(f.selected.begin(), f.selected.end(), i) != f.selected.end();
        if (!chosen) EXPECT_EQ(f.bits_out[i], 0u);
      }
    }
  }
  EXPECT_GT(idle_frames, 0);
  EXPECT_GT(busy_frames, 0);
}

TEST(Frame, TraceRecordFields) {
  SimulationSetup s = small_setup(3);
  FrameStreams streams = FrameStreams::derive(4, 0, 3);
  EpisodeState state = EpisodeState::initial(s, streams);
  const FrameTrace f = step_frame(state, s, streams);
  const auto j = nlohmann::json::parse(trace_record(f));
  EXPECT_EQ(j["schema"], std::string(kTraceSchema));
  EXPECT_EQ(j["frame"], 0);
  EXPECT_EQ(j["bits_before"].size(), 3u);
  EXPECT_EQ(j["votes"].size(), 3u);
  for (const char* key : {"pu_active", "design_feasible", "pfa", "k", "fused_pfa", "fused_pd",
                          "fc_idle", "selected", "times", "fc_utility", "case", "bits_in",
                          "bits_out", "bits_after", "rate_hypothesis"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Episode, Deterministic) {
  const SimulationSetup s = small_setup(4);
  const EpisodeResult a = run_episode(60, s, 99, 2, true);
  const EpisodeResult b = run_episode(60, s, 99, 2, true);
  const EpisodeResult c = run_episode(60, s, 99, 3, true);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_NE(a.trace, c.trace);
  EXPECT_EQ(a.stats.completed_batches, b.stats.completed_batches);
  EXPECT_EQ(a.trace.size(), 60u);
}

TEST(Episode, InitialBatchClearedAtFirstAccess) {
  SimulationSetup s = small_setup(3);
  s.traffic.scale = 1e9;  // no further arrivals
  const EpisodeResult r = run_episode(50, s, 7, 0, true);
  const double t = s.params.frame_duration;
  std::vector<double> expected(3, std::nan(""));
  for (const auto& line : r.trace) {
    const auto j = nlohmann::json::parse(line);
    if (!j["fc_idle"].get<bool>()) continue;
    for (std::size_t i : j["selected"].get<std::vector<std::size_t>>()) {
      if (std::isnan(expected[i]) && j["bits_out"][i].get<std::uint64_t>() > 0) {
        expected[i] = (j["frame"].get<double>() + 1.0) * t;
      }
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_FALSE(std::isnan(expected[i]));
    EXPECT_EQ(r.stats.completed_batches[i], 1u);
    EXPECT_NEAR(r.stats.per_su_mean_delay[i], expected[i], 1e-15);
  }
  EXPECT_EQ(r.stats.incomplete_batches, 0u);
}

TEST(Episode, DecisionFrequencies) {
  SimulationSetup s = small_setup(5);
  s.params.gamma_db = -7.0;
  s.traffic.scale = 1e-4;  // keep buffers non-empty so most frames run a design
  s.traffic.accumulation_time = 0.0;
  const EpisodeResult r = run_episode(20000, s, 3, 0);
  const DecisionCounts& d = r.decisions;
  ASSERT_GT(d.h0_frames, 1000u);
  ASSERT_GT(d.h1_frames, 1000u);
  EXPECT_LE(std::abs(d.h0_busy - d.h0_expected), 4.0 * std::sqrt(d.h0_variance));
  EXPECT_LE(std::abs(d.h1_busy - d.h1_expected), 4.0 * std::sqrt(d.h1_variance));
}

TEST(Jain, KnownValues) {
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{1, 1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{1, 0, 0, 0}), 0.25);
  EXPECT_NEAR(jain_index(std::vector<double>{1, 2, 3}), 36.0 / 42.0, 1e-15);
  EXPECT_NEAR(jain_index(std::vector<double>{2, 4, 6}), 36.0 / 42.0, 1e-15);
  EXPECT_THROW(jain_index(std::vector<double>{0, 0}), DomainError);
  EXPECT_THROW(jain_index(std::vector<double>{}), DomainError);
  EXPECT_THROW(jain_index(std::vector<double>{1, -1}), DomainError);
}

TEST(MonteCarlo, Summaries) {
  const auto one = monte_carlo_average(1, [](std::size_t) { return 3.5; });
  EXPECT_DOUBLE_EQ(one.mean, 3.5);
  EXPECT_EQ(one.std_error, 0.0);
  const auto flat = monte_carlo_average(10, [](std::size_t) { return 2.0; });
  EXPECT_EQ(flat.std_error, 0.0);
  EXPECT_EQ(flat.trials, 10u);

  auto metric = [](std::size_t t) { return std::sin(static_cast<double>(t)); };
  const auto a = monte_carlo_average(257, metric, 1);
  const auto b = monte_carlo_average(257, metric, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);

  const auto two = summarize(std::vector<double>{1.0, 3.0});
  EXPECT_DOUBLE_EQ(two.mean, 2.0);
  EXPECT_DOUBLE_EQ(two.std_error, 1.0);
  EXPECT_THROW(monte_carlo_average(0, metric), DomainError);
}
