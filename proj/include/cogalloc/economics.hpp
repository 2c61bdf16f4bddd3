#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cogalloc/sensing.hpp"
#include "cogalloc/units.hpp"

namespace cogalloc {

/// Radio, economic and frame constants shared by every SU.
/// Defaults reproduce the reference operating point; times are in seconds,
/// powers in watts, prices in an abstract currency.
struct SystemParams {
  int n_samples = 40;
  double sample_interval = 1.0 / 6e6;
  double frame_duration = 1e-3;
  double tau2 = 10e-6;
  double tau5 = 10e-6;
  double tau_r = 5e-6;
  double tau_r_prime = 5e-6;
  double p_st = dbm_to_watts(23.0);
  double p_pt = dbm_to_watts(43.0);
  double bandwidth = 15e3;
  double noise_power = noise_power_watts(-174.0, 15e3);
  double sense_cost = 1e-4;
  double report_cost = 1e-3;
  double p_h0 = 0.8;
  double zeta = 0.7;
  double gamma_db = -7.0;
  double noise_var = 1.0;

  /// Throws DomainError naming the first violated invariant.
  void validate() const;

  double p_h1() const { return 1.0 - p_h0; }

  /// Per-frame cost every participating SU pays for sensing and reporting.
  double sensing_cost() const { return n_samples * sense_cost + report_cost; }

  SensingGeometry geometry() const {
    return SensingGeometry::from_db(gamma_db, n_samples, noise_var);
  }
};

struct SecondaryUser {
  std::uint32_t id = 0;
  double gain_to_fc = 1.0;
  std::uint64_t buffer_bits = 0;
  double pay_rate = 0.1;
  double earn_rate = 10.0;

  void validate() const;
  bool profitable() const { return earn_rate > pay_rate; }
};

struct TimeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// SU-to-FC rates with the PU absent (idle) and present but missed.
struct LinkRates {
  double idle = 0.0;
  double interfered = 0.0;
};

double rate_idle(const SecondaryUser& su, const SystemParams& params);

/// Expectation over unit-mean exponential PU-to-FC fading, by adaptive
/// quadrature. Throws NumericError when the tolerance is not met.
double rate_interfered(const SecondaryUser& su, const SystemParams& params);

LinkRates link_rates(const SecondaryUser& su, const SystemParams& params);

/// Access-weighted rate given fused error probabilities.
double effective_rate(const LinkRates& rates, double fused_pfa, double fused_pd,
                      double p_h0);

double effective_rate(const SecondaryUser& su, const SensingDesign& design,
                      const SensingGeometry& geom, const SystemParams& params,
                      int l_active);

/// Break-even time. nullopt marks an SU that can never profit (b <= a).
std::optional<double> time_lower_bound(double rate, const SecondaryUser& su,
                                       const SystemParams& params);
std::optional<double> time_lower_bound(const SecondaryUser& su,
                                       const SensingDesign& design,
                                       const SensingGeometry& geom,
                                       const SystemParams& params, int l_active);

/// Time that clears the whole buffer. Throws NumericError for a zero rate.
double time_upper_bound(double rate, const SecondaryUser& su);
double time_upper_bound(const SecondaryUser& su, const SensingDesign& design,
                        const SensingGeometry& geom, const SystemParams& params,
                        int l_active);

/// Usable transmission time with l_active reporting users. May be negative.
double effective_time(const SystemParams& params, int l_active);

/// Sum over active SUs of rate * pay_rate * time.
double fc_utility(const std::vector<bool>& active, const std::vector<double>& times,
                  const std::vector<double>& rates, const std::vector<double>& pay_rates);

double su_utility(double rate, const SecondaryUser& su, const SystemParams& params,
                  double t_alloc, bool active);
double su_utility(const SecondaryUser& su, const SensingDesign& design,
                  const SensingGeometry& geom, const SystemParams& params,
                  int l_active, double t_alloc, bool active);

}  // namespace cogalloc
