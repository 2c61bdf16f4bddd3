#include "cogalloc/simkit.hpp"

#include <cmath>
#include <limits>
#include <json.hpp>
#include <numeric>

#include "cogalloc/error.hpp"
#include "cogalloc/parallel.hpp"

namespace cogalloc {

void TrafficModel::validate() const {
  if (!(shape > 0.0)) throw DomainError("TrafficModel: shape must be positive");
  if (!(scale > 0.0)) throw DomainError("TrafficModel: scale must be positive");
  if (!(accumulation_time >= 0.0)) {
    throw DomainError("TrafficModel: accumulation_time must be non-negative");
  }
}

double pareto_from_uniform(const TrafficModel& model, double u) {
  return model.scale * std::pow(u, -1.0 / model.shape);
}

double sample_pareto_idle(const TrafficModel& model, Pcg32& rng) {
  return pareto_from_uniform(model, rng.uniform());
}

double exponential_from_uniform(double mean, double u) {
  if (!(mean > 0.0)) throw DomainError("exponential gain: mean must be positive");
  return -mean * std::log(u);
}

double sample_exponential_gain(double mean, Pcg32& rng) {
  return exponential_from_uniform(mean, rng.uniform());
}

void BufferState::push(double arrival, std::uint64_t bits) {
  if (bits == 0) return;
  pending_.push_back({arrival, bits});
  bits_ += bits;
}

std::uint64_t BufferState::drain(std::uint64_t capacity,
                                 const std::function<void(double)>& on_complete) {
  std::uint64_t removed = 0;
  while (capacity > 0 && !pending_.empty()) {
    PendingBatch& head = pending_.front();
    const std::uint64_t take = std::min(capacity, head.remaining);
    head.remaining -= take;
    capacity -= take;
    removed += take;
    if (head.remaining == 0) {
      on_complete(head.arrival);
      pending_.pop_front();
    }
  }
  bits_ -= removed;
  return removed;
}

void SimulationSetup::validate() const {
  params.validate();
  traffic.validate();
  if (users.empty()) throw DomainError("SimulationSetup: no SUs");
  if (!(sensing_gain_mean > 0.0)) {
    throw DomainError("SimulationSetup: sensing_gain_mean must be positive");
  }
  for (const auto& u : users) {
    if (!(u.gain_mean > 0.0)) throw DomainError("SimulationSetup: gain_mean must be positive");
  }
}

FrameStreams FrameStreams::derive(std::uint64_t seed, std::uint64_t trial, std::size_t n_users) {
  FrameStreams s{derive_stream(seed, trial, 0, StreamPurpose::PuActivity),
                 derive_stream(seed, trial, 0, StreamPurpose::SensingGain),
                 {},
                 {},
                 {}};
  for (std::size_t i = 0; i < n_users; ++i) {
    const auto su = static_cast<std::uint32_t>(i);
    s.votes.push_back(derive_stream(seed, trial, su, StreamPurpose::Votes));
    s.fc_gain.push_back(derive_stream(seed, trial, su, StreamPurpose::FcGain));
    s.traffic.push_back(derive_stream(seed, trial, su, StreamPurpose::Traffic));
  }
  return s;
}

EpisodeState EpisodeState::initial(const SimulationSetup& setup, FrameStreams& streams) {
  const std::size_t m = setup.users.size();
  EpisodeState state;
  state.buffers.resize(m);
  state.next_arrival.resize(m);
  state.delay_sum.assign(m, 0.0);
  state.completed.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    state.buffers[i].push(0.0, setup.traffic.initial_bits);
    state.next_arrival[i] =
        sample_pareto_idle(setup.traffic, streams.traffic[i]) + setup.traffic.accumulation_time;
  }
  return state;
}

FrameTrace step_frame(EpisodeState& state, const SimulationSetup& setup,
                      FrameStreams& streams) {
  const std::size_t m = setup.users.size();
  const SystemParams& params = setup.params;
  const double frame_start = static_cast<double>(state.frame) * params.frame_duration;
  const double frame_end = frame_start + params.frame_duration;

  FrameTrace tr;
  tr.frame_index = state.frame;
  tr.bits_before.resize(m);
  tr.bits_in.assign(m, 0);
  tr.bits_out.assign(m, 0);
  tr.bits_after.resize(m);
  tr.local_votes.assign(m, false);

  // Batches that landed since the previous frame start become visible now.
  for (std::size_t i = 0; i < m; ++i) {
    tr.bits_before[i] = state.buffers[i].bits();
    while (state.next_arrival[i] <= frame_start) {
      state.buffers[i].push(state.next_arrival[i], setup.traffic.batch_bits);
      tr.bits_in[i] += setup.traffic.batch_bits;
      state.next_arrival[i] +=
          sample_pareto_idle(setup.traffic, streams.traffic[i]) + setup.traffic.accumulation_time;
    }
  }

  std::vector<SecondaryUser> users(m);
  for (std::size_t i = 0; i < m; ++i) {
    const SuTemplate& t = setup.users[i];
    users[i] = {t.id, sample_exponential_gain(t.gain_mean, streams.fc_gain[i]),
                state.buffers[i].bits(), t.pay_rate, t.earn_rate};
  }
  tr.pu_active = streams.pu_activity.uniform() >= params.p_h0;
  std::vector<double> vote_draws(m);
  for (std::size_t i = 0; i < m; ++i) vote_draws[i] = streams.votes[i].uniform();

  SensingGeometry geom = params.geometry();
  if (setup.resample_sensing_gain) {
    const double g = sample_exponential_gain(setup.sensing_gain_mean, streams.sensing_gain);
    geom = SensingGeometry(geom.gamma() * g, geom.n_samples(), geom.noise_var());
  }

  OptimizationOutcome plan = joint_optimize(users, geom, params, setup.grid);
  tr.design_feasible = plan.feasible;
  if (plan.feasible) {
    const SensingDesign& design = *plan.best_design;
    tr.pfa = design.pfa();
    tr.k = design.k();
    tr.selected = plan.best_allocation.selected();
    const int l = static_cast<int>(tr.selected.size());
    tr.fused_pfa = global_pfa(design, l);
    tr.fused_pd = global_pd(design, geom, l);
    const double p_vote = tr.pu_active ? local_pd(design.pfa(), geom) : design.pfa();
    int busy_votes = 0;
    for (std::size_t i : tr.selected) {
      tr.local_votes[i] = vote_draws[i] < p_vote;
      busy_votes += tr.local_votes[i] ? 1 : 0;
    }
    tr.fc_idle = busy_votes < design.k();
  }
  tr.allocation = std::move(plan.best_allocation);

  if (tr.fc_idle) {
    tr.rate_hypothesis = tr.pu_active ? 1 : 0;
    for (std::size_t i : tr.selected) {
      const double rate = tr.pu_active ? rate_interfered(users[i], params)
                                       : rate_idle(users[i], params);
      const auto capacity =
          static_cast<std::uint64_t>(std::floor(rate * tr.allocation.times[i]));
      tr.bits_out[i] = state.buffers[i].drain(capacity, [&](double arrival) {
        state.delay_sum[i] += frame_end - arrival;
        ++state.completed[i];
      });
    }
  }
  for (std::size_t i = 0; i < m; ++i) tr.bits_after[i] = state.buffers[i].bits();
  ++state.frame;
  return tr;
}

std::string trace_record(const FrameTrace& f) {
  nlohmann::json j;
  j["schema"] = kTraceSchema;
  j["frame"] = f.frame_index;
  j["pu_active"] = f.pu_active;
  j["design_feasible"] = f.design_feasible;
  j["pfa"] = f.pfa;
  j["k"] = f.k;
  j["fused_pfa"] = f.fused_pfa;
  j["fused_pd"] = f.fused_pd;
  j["votes"] = std::vector<bool>(f.local_votes);
  j["fc_idle"] = f.fc_idle;
  j["selected"] = f.selected;
  j["times"] = f.allocation.times;
  j["fc_utility"] = f.allocation.fc_utility;
  j["case"] = to_string(f.allocation.case_label);
  j["bits_before"] = f.bits_before;
  j["bits_in"] = f.bits_in;
  j["bits_out"] = f.bits_out;
  j["bits_after"] = f.bits_after;
  j["rate_hypothesis"] = f.rate_hypothesis;
  return j.dump();
}

EpisodeResult run_episode(std::uint64_t n_frames, const SimulationSetup& setup,
                          std::uint64_t seed, std::uint64_t trial, bool keep_trace) {
  if (n_frames < 1) throw DomainError("run_episode: need at least one frame");
  setup.validate();
  const std::size_t m = setup.users.size();
  FrameStreams streams = FrameStreams::derive(seed, trial, m);
  EpisodeState state = EpisodeState::initial(setup, streams);

  EpisodeResult result;
  DecisionCounts& d = result.decisions;
  for (std::uint64_t n = 0; n < n_frames; ++n) {
    FrameTrace f = step_frame(state, setup, streams);
    if (f.design_feasible) {
      const bool busy = !f.fc_idle;
      if (f.pu_active) {
        ++d.h1_frames;
        d.h1_busy += busy ? 1 : 0;
        d.h1_expected += f.fused_pd;
        d.h1_variance += f.fused_pd * (1.0 - f.fused_pd);
      } else {
        ++d.h0_frames;
        d.h0_busy += busy ? 1 : 0;
        d.h0_expected += f.fused_pfa;
        d.h0_variance += f.fused_pfa * (1.0 - f.fused_pfa);
      }
    }
    if (keep_trace) result.trace.push_back(trace_record(f));
  }

  DelayStats& s = result.stats;
  s.per_su_mean_delay.assign(m, std::numeric_limits<double>::quiet_NaN());
  s.completed_batches = state.completed;
  std::vector<double> observed;
  for (std::size_t i = 0; i < m; ++i) {
    s.incomplete_batches += state.buffers[i].pending().size();
    if (state.completed[i] > 0) {
      s.per_su_mean_delay[i] = state.delay_sum[i] / static_cast<double>(state.completed[i]);
      observed.push_back(s.per_su_mean_delay[i]);
    }
  }
  if (!observed.empty()) {
    s.mean_delay = std::accumulate(observed.begin(), observed.end(), 0.0) /
                   static_cast<double>(observed.size());
    s.jain_index = jain_index(observed);
  } else {
    s.mean_delay = std::numeric_limits<double>::quiet_NaN();
    s.jain_index = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

double jain_index(std::span<const double> values) {
  if (values.empty()) throw DomainError("jain_index: empty input");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw DomainError("jain_index: values must be non-negative");
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw DomainError("jain_index: all values are zero");
  return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

MonteCarloSummary summarize(std::span<const double> samples) {
  MonteCarloSummary s;
  s.trials = samples.size();
  if (samples.empty()) return s;
  const double n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

MonteCarloSummary monte_carlo_average(std::size_t n_trials,
                                      const std::function<double(std::size_t)>& metric,
                                      unsigned jobs) {
  if (n_trials < 1) throw DomainError("monte_carlo_average: need at least one trial");
  std::vector<double> samples(n_trials);
  parallel_for(n_trials, jobs, [&](std::size_t t) { samples[t] = metric(t); });
  return summarize(samples);
}

}  // namespace cogalloc
