#include "cogalloc/economics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "cogalloc/error.hpp"

namespace cogalloc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("SystemParams: ") + what);
}

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void SystemParams::validate() const {
  require(n_samples >= 1, "n_samples must be >= 1");
  require(positive(sample_interval), "sample_interval must be positive");
  require(positive(frame_duration), "frame_duration must be positive");
  require(positive(tau2) && positive(tau5) && positive(tau_r) && positive(tau_r_prime),
          "phase overheads must be positive");
  require(positive(p_st) && positive(p_pt), "transmit powers must be positive");
  require(positive(bandwidth), "bandwidth must be positive");
  require(positive(noise_power), "noise_power must be positive");
  require(positive(sense_cost) && positive(report_cost), "sensing costs must be positive");
  require(p_h0 > 0.0 && p_h0 < 1.0, "p_h0 must lie in (0, 1)");
  require(zeta > 0.0 && zeta < 1.0, "zeta must lie in (0, 1)");
  require(std::isfinite(gamma_db), "gamma_db must be finite");
  require(positive(noise_var), "noise_var must be positive");
  require(frame_duration > tau2 + n_samples * sample_interval + tau5,
          "frame_duration leaves no time after sensing overheads");
}

void SecondaryUser::validate() const {
  if (!positive(gain_to_fc)) throw DomainError("SecondaryUser: gain_to_fc must be positive");
  if (!(pay_rate >= 0.0) || !(earn_rate >= 0.0)) {
    throw DomainError("SecondaryUser: prices must be non-negative");
  }
}

double rate_idle(const SecondaryUser& su, const SystemParams& params) {
  return params.bandwidth * std::log2(1.0 + su.gain_to_fc * params.p_st / params.noise_power);
}

double rate_interfered(const SecondaryUser& su, const SystemParams& params) {
  const double signal = su.gain_to_fc * params.p_st;
  const double n0 = params.noise_power;
  const double interference = params.p_pt;
  if (interference == 0.0) return rate_idle(su, params);

  auto integrand = [&](double x) {
    return std::exp(-x) * std::log1p(signal / (x * interference + n0));
  };
  boost::math::quadrature::exp_sinh<double> quad;
  double error = 0.0;
  double l1 = 0.0;
  constexpr double tolerance = 1e-10;
  const double nats = quad.integrate(integrand, tolerance, &error, &l1);
  if (!std::isfinite(nats) || error > 1e-8 * std::max(l1, 1e-300)) {
    std::ostringstream msg;
    msg << "rate_interfered: quadrature missed tolerance (value=" << nats
        << ", error=" << error << ", gain=" << su.gain_to_fc << ")";
    throw NumericError(msg.str());
  }
  return params.bandwidth * nats / std::numbers::ln2;
}

LinkRates link_rates(const SecondaryUser& su, const SystemParams& params) {
  return {rate_idle(su, params), rate_interfered(su, params)};
}

double effective_rate(const LinkRates& rates, double fused_pfa, double fused_pd,
                      double p_h0) {
  return p_h0 * (1.0 - fused_pfa) * rates.idle +
         (1.0 - p_h0) * (1.0 - fused_pd) * rates.interfered;
}

double effective_rate(const SecondaryUser& su, const SensingDesign& design,
                      const SensingGeometry& geom, const SystemParams& params,
                      int l_active) {
  const double pfa = global_pfa(design, l_active);
  const double pd = global_pd(design, geom, l_active);
  return effective_rate(link_rates(su, params), pfa, pd, params.p_h0);
}

std::optional<double> time_lower_bound(double rate, const SecondaryUser& su,
                                       const SystemParams& params) {
  if (!su.profitable()) return std::nullopt;
  return params.sensing_cost() / (rate * (su.earn_rate - su.pay_rate));
}

std::optional<double> time_lower_bound(const SecondaryUser& su,
                                       const SensingDesign& design,
                                       const SensingGeometry& geom,
                                       const SystemParams& params, int l_active) {
  if (!su.profitable()) return std::nullopt;
  return time_lower_bound(effective_rate(su, design, geom, params, l_active), su, params);
}

double time_upper_bound(double rate, const SecondaryUser& su) {
  if (!(rate > 0.0)) throw NumericError("time_upper_bound: effective rate is zero");
  return static_cast<double>(su.buffer_bits) / rate;
}

double time_upper_bound(const SecondaryUser& su, const SensingDesign& design,
                        const SensingGeometry& geom, const SystemParams& params,
                        int l_active) {
  return time_upper_bound(effective_rate(su, design, geom, params, l_active), su);
}

double effective_time(const SystemParams& params, int l_active) {
  return params.frame_duration - params.tau2 - params.n_samples * params.sample_interval -
         params.tau5 - l_active * params.tau_r_prime;
}

double fc_utility(const std::vector<bool>& active, const std::vector<double>& times,
                  const std::vector<double>& rates, const std::vector<double>& pay_rates) {
  if (active.size() != times.size() || times.size() != rates.size() ||
      rates.size() != pay_rates.size()) {
    throw PreconditionViolation("fc_utility: per-SU vectors differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) total += rates[i] * pay_rates[i] * times[i];
  }
  return total;
}

double su_utility(double rate, const SecondaryUser& su, const SystemParams& params,
                  double t_alloc, bool active) {
  if (!active) return 0.0;
  const double cost = params.sensing_cost();
  const double u = rate * t_alloc * (su.earn_rate - su.pay_rate) - cost;
  // At the break-even time the two terms cancel to a few ulps.
  if (std::abs(u) <= 8.0 * std::numeric_limits<double>::epsilon() * cost) return 0.0;
  return u;
}

double su_utility(const SecondaryUser& su, const SensingDesign& design,
                  const SensingGeometry& geom, const SystemParams& params,
                  int l_active, double t_alloc, bool active) {
  if (!active) return 0.0;
  return su_utility(effective_rate(su, design, geom, params, l_active), su, params,
                    t_alloc, active);
}

}  // namespace cogalloc
