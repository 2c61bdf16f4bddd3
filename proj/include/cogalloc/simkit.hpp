#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogalloc/allocator.hpp"
#include "cogalloc/economics.hpp"
#include "cogalloc/optimizer.hpp"
#include "cogalloc/rng.hpp"

namespace cogalloc {

/// Pareto idle periods between traffic batches. Times in seconds.
struct TrafficModel {
  double shape = 1.0;
  double scale = 7e-3;
  std::uint64_t batch_bits = 10;
  double accumulation_time = 1e-3;
  std::uint64_t initial_bits = 10;

  void validate() const;
};

double pareto_from_uniform(const TrafficModel& model, double u);
double sample_pareto_idle(const TrafficModel& model, Pcg32& rng);

double exponential_from_uniform(double mean, double u);
double sample_exponential_gain(double mean, Pcg32& rng);

struct PendingBatch {
  double arrival = 0.0;
  std::uint64_t remaining = 0;
};

class BufferState {
 public:
  std::uint64_t bits() const { return bits_; }
  const std::deque<PendingBatch>& pending() const { return pending_; }

  void push(double arrival, std::uint64_t bits);

  /// Removes up to `capacity` bits oldest-first. on_complete(arrival) fires
  /// for each batch whose last bit leaves. Returns the bits removed.
  std::uint64_t drain(std::uint64_t capacity,
                      const std::function<void(double arrival)>& on_complete);

 private:
  std::uint64_t bits_ = 0;
  std::deque<PendingBatch> pending_;
};

struct SuTemplate {
  std::uint32_t id = 0;
  double pay_rate = 0.1;
  double earn_rate = 10.0;
  double gain_mean = 1.0;
};

struct SimulationSetup {
  SystemParams params;
  TrafficModel traffic;
  std::vector<SuTemplate> users;
  DesignGrid grid = DesignGrid::uniform(10);
  double sensing_gain_mean = 1.0;
  bool resample_sensing_gain = false;

  void validate() const;
};

/// Independent generators for one trial.
struct FrameStreams {
  Pcg32 pu_activity;
  Pcg32 sensing_gain;
  std::vector<Pcg32> votes;
  std::vector<Pcg32> fc_gain;
  std::vector<Pcg32> traffic;

  static FrameStreams derive(std::uint64_t seed, std::uint64_t trial, std::size_t n_users);
};

struct EpisodeState {
  std::uint64_t frame = 0;
  std::vector<BufferState> buffers;
  std::vector<double> next_arrival;
  std::vector<double> delay_sum;
  std::vector<std::uint64_t> completed;

  static EpisodeState initial(const SimulationSetup& setup, FrameStreams& streams);
};

struct FrameTrace {
  std::uint64_t frame_index = 0;
  bool pu_active = false;
  bool design_feasible = false;
  double pfa = 0.0;
  int k = 0;
  double fused_pfa = 0.0;
  double fused_pd = 0.0;
  std::vector<bool> local_votes;
  bool fc_idle = false;
  std::vector<std::size_t> selected;
  AllocationResult allocation;
  std::vector<std::uint64_t> bits_before;
  std::vector<std::uint64_t> bits_in;
  std::vector<std::uint64_t> bits_out;
  std::vector<std::uint64_t> bits_after;
  int rate_hypothesis = -1;  // 0: idle rate applied, 1: interfered rate, -1: no access
};

/// Advances one frame: credit arrivals, draw channels and PU state, optimise,
/// vote, fuse and drain.
FrameTrace step_frame(EpisodeState& state, const SimulationSetup& setup,
                      FrameStreams& streams);

struct DelayStats {
  std::vector<double> per_su_mean_delay;  // NaN when an SU completed nothing
  std::vector<std::uint64_t> completed_batches;
  std::uint64_t incomplete_batches = 0;
  double mean_delay = 0.0;  // over SUs with at least one completed batch
  double jain_index = 0.0;
};

struct DecisionCounts {
  std::uint64_t h0_frames = 0;
  std::uint64_t h0_busy = 0;
  double h0_expected = 0.0;
  double h0_variance = 0.0;
  std::uint64_t h1_frames = 0;
  std::uint64_t h1_busy = 0;
  double h1_expected = 0.0;
  double h1_variance = 0.0;
};

struct EpisodeResult {
  DelayStats stats;
  DecisionCounts decisions;
  std::vector<std::string> trace;  // NDJSON records when requested
};

inline constexpr std::string_view kTraceSchema = "cogalloc.trace/1";

std::string trace_record(const FrameTrace& frame);

EpisodeResult run_episode(std::uint64_t n_frames, const SimulationSetup& setup,
                          std::uint64_t seed, std::uint64_t trial = 0,
                          bool keep_trace = false);

/// (sum x)^2 / (n sum x^2). Throws DomainError for empty or all-zero input.
double jain_index(std::span<const double> values);

struct MonteCarloSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// metric(trial) for trial in [0, n_trials), aggregated in trial order so
/// the result does not depend on `jobs`.
MonteCarloSummary monte_carlo_average(std::size_t n_trials,
                                      const std::function<double(std::size_t)>& metric,
                                      unsigned jobs = 1);

MonteCarloSummary summarize(std::span<const double> samples);

}  // namespace cogalloc
