#include "cogalloc/probe.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numeric>

#include "cogalloc/error.hpp"
#include "cogalloc/sensing.hpp"
#include "cogalloc/units.hpp"

namespace cogalloc {

namespace {
constexpr double kTailReach = 0.25;
}

void ProbeParams::validate() const {
  if (m_users < 1) throw DomainError("ProbeParams: m_users must be >= 1");
  if (!(k > 0.0 && k <= m_users)) throw DomainError("ProbeParams: k out of range");
  if (!(p_h0 > 0.0 && p_h0 < 1.0)) throw DomainError("ProbeParams: p_h0 must lie in (0, 1)");
  if (n_samples < 1) throw DomainError("ProbeParams: n_samples must be >= 1");
  const auto m = static_cast<std::size_t>(m_users);
  if (r0.size() != m || r1.size() != m || airtime.size() != m) {
    throw DomainError("ProbeParams: r0, r1 and airtime need one entry per SU");
  }
  if (!(pfa_step > 0.0) || !(k_step > 0.0)) throw DomainError("ProbeParams: steps must be positive");
  if (!(std::abs(k - std::round(k)) + k_step <= kTailReach)) {
    throw DomainError("ProbeParams: k +/- k_step must stay within 0.25 of an integer");
  }
}

double binomial_density(double p, double x, int m) {
  const double log_c = std::lgamma(m + 1.0) - std::lgamma(x + 1.0) - std::lgamma(m - x + 1.0);
  return std::exp(log_c + x * std::log(p) + (m - x) * std::log1p(-p));
}

double continuous_upper_tail(double p, double k, int m) {
  const int anchor = static_cast<int>(std::lround(k));
  if (!(std::abs(k - anchor) <= kTailReach) || anchor < 0 || anchor > m) {
    throw DomainError("continuous_upper_tail: k must lie within 0.25 of an integer in [0, m]");
  }
  double tail = binomial_upper_tail(p, anchor, m);
  if (k != anchor) {
    auto f = [&](double x) { return binomial_density(p, x, m); };
    tail -= boost::math::quadrature::gauss<double, 20>::integrate(f, anchor, k);
  }
  return tail;
}

double probe_utility(const ProbeParams& params, double pfa, double k) {
  double idle = 0.0;
  double busy = 0.0;
  for (std::size_t i = 0; i < params.r0.size(); ++i) {
    idle += params.r0[i] * params.airtime[i];
    busy += params.r1[i] * params.airtime[i];
  }
  idle *= params.p_h0;
  busy *= 1.0 - params.p_h0;
  const SensingGeometry geom = SensingGeometry::from_db(params.gamma_db, params.n_samples);
  const double pd = local_pd(pfa, geom);
  return idle * (1.0 - continuous_upper_tail(pfa, k, params.m_users)) +
         busy * (1.0 - continuous_upper_tail(pd, k, params.m_users));
}

std::vector<double> default_probe_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  return grid;
}

std::vector<ProbeRow> quasiconcavity_probe(const ProbeParams& params,
                                           std::span<const double> pfa_grid) {
  params.validate();
  const double hp = params.pfa_step;
  const double hk = params.k_step;
  const double k = params.k;
  std::vector<ProbeRow> rows;
  rows.reserve(pfa_grid.size());
  for (double p : pfa_grid) {
    if (!(p - hp > 0.0 && p + hp < 1.0)) {
      throw DomainError("quasiconcavity_probe: pfa too close to 0 or 1 for the step");
    }
    auto u = [&](double dp, double dk) { return probe_utility(params, p + dp, k + dk); };
    const double u0 = u(0, 0);
    const double u_p = (u(hp, 0) - u(-hp, 0)) / (2 * hp);
    const double u_k = (u(0, hk) - u(0, -hk)) / (2 * hk);
    const double u_pp = (u(hp, 0) - 2 * u0 + u(-hp, 0)) / (hp * hp);
    const double u_kk = (u(0, hk) - 2 * u0 + u(0, -hk)) / (hk * hk);
    const double u_pk = (u(hp, hk) - u(hp, -hk) - u(-hp, hk) + u(-hp, -hk)) / (4 * hp * hk);

    ProbeRow row;
    row.pfa = p;
    row.du_dpfa = u_p;
    row.du_dk = u_k;
    // | 0    u_p   u_k  |
    // | u_p  u_pp  u_pk |
    // | u_k  u_pk  u_kk |
    row.det_ha = -u_p * u_p;
    row.det_h = -u_p * u_p * u_kk + 2 * u_p * u_k * u_pk - u_k * u_k * u_pp;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cogalloc
