#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogalloc/economics.hpp"
#include "cogalloc/optimizer.hpp"
#include "cogalloc/probe.hpp"
#include "cogalloc/simkit.hpp"

namespace cogalloc {

// Values are kept in the units the config file uses (dBm, Hz) so that an
// emitted config reloads to exactly the same document.
struct SystemConfig {
  int n_samples = 40;
  double sampling_rate_hz = 6e6;
  double frame_duration_s = 1e-3;
  double tau2_s = 10e-6;
  double tau5_s = 10e-6;
  double tau_r_s = 5e-6;
  double tau_r_prime_s = 5e-6;
  double p_st_dbm = 23.0;
  double p_pt_dbm = 43.0;
  double bandwidth_hz = 15e3;
  double noise_psd_dbm_per_hz = -174.0;
  double sense_cost = 1e-4;
  double report_cost = 1e-3;
  double p_h0 = 0.8;
  double zeta = 0.7;
  double gamma_db = -7.0;
  double noise_var = 1.0;
  double bit_rate_bps = 250e3;  // accepted, not used by any computation

  SystemParams to_params() const;
};

struct UsersConfig {
  int count = 5;
  double gain_mean = 1.0;
  double pay_rate = 0.1;
  double earn_rate = 10.0;
  std::uint64_t buffer_bits = 1000;
  std::vector<SecondaryUser> explicit_users;
};

struct GridConfig {
  int divisions = 10;
  std::vector<double> pfa_values;  // overrides divisions when non-empty
  std::optional<int> k_max;

  DesignGrid to_grid() const;
};

struct TrafficConfig {
  double shape = 1.0;
  double scale_s = 7e-3;
  std::uint64_t batch_bits = 10;
  double accumulation_s = 1e-3;
  std::uint64_t initial_bits = 10;
  std::uint64_t frames = 200;
  double sensing_gain_mean = 1.0;
  bool resample_sensing_gain = false;
};

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::optional<Sweep> sweep;
  std::optional<Sweep> series;
};

struct ProbeConfig {
  ProbeParams params = ProbeParams::reference_example();
  std::vector<double> pfa_values = default_probe_grid();
};

struct RunConfig {
  SystemConfig system;
  UsersConfig users;
  GridConfig grid;
  TrafficConfig traffic;
  ExperimentConfig experiment;
  ProbeConfig probe;
  std::size_t oracle_cap = 12;
  std::uint64_t seed = 1;
  std::size_t trials = 1;

  /// Throws ConfigError listing every violated invariant.
  void validate() const;
};

/// Parameters a sweep or series may vary.
const std::vector<std::string>& sweepable_parameters();

RunConfig parse_config(std::string_view text, std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
std::string emit_config(const RunConfig& config);

/// Copy of config with one sweepable parameter replaced.
RunConfig with_parameter(const RunConfig& config, const std::string& parameter, double value);

/// SUs for one Monte-Carlo trial. Gains come from per-(trial, SU) streams,
/// so every sweep point sees the same draws.
std::vector<SecondaryUser> make_instance(const RunConfig& config, std::uint64_t trial);

bool identical_costs(std::span<const SecondaryUser> users);

SimulationSetup make_simulation(const RunConfig& config);

}  // namespace cogalloc
