#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "cogalloc/allocator.hpp"
#include "cogalloc/economics.hpp"
#include "cogalloc/sensing.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace cogalloc;

/// Users with exponential gains and identical prices.
inline std::vector<SecondaryUser> random_users(std::size_t m, std::uint64_t seed,
                                               std::uint64_t buffer = 1000,
                                               double gain_mean = 1.0) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0 / gain_mean);
  std::vector<SecondaryUser> users;
  for (std::size_t i = 0; i < m; ++i) {
    users.push_back(SecondaryUser{static_cast<std::uint32_t>(i), expo(gen) + 1e-9, buffer, 0.1, 10.0});
  }
  return users;
}

/// Owns everything an AllocationContext refers to.
struct Population {
  std::vector<SecondaryUser> users;
  std::vector<LinkRates> rates;
  FusionProfile profile;
  SystemParams params;
  std::unique_ptr<AllocationContext> ctx;

  Population(std::vector<SecondaryUser> u, const SensingDesign& design,
             const SensingGeometry& geom, const SystemParams& p)
      : users(std::move(u)),
        profile(FusionProfile::compute(design, geom, static_cast<int>(users.size()))),
        params(p) {
    for (const auto& su : users) rates.push_back(link_rates(su, params));
    ctx = std::make_unique<AllocationContext>(users, rates, profile, params);
  }
  Population(const Population&) = delete;
  Population& operator=(const Population&) = delete;

  std::vector<std::size_t> all() const {
    std::vector<std::size_t> idx(users.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
};

struct SubsetBest {
  double utility = -std::numeric_limits<double>::infinity();
  std::uint32_t mask = 0;
};

/// Best subset by brute force for one design, with the inner allocation
/// solved by the vertex LP. Fusion probabilities come from decision-vector
/// enumeration; only the link rates are taken from the library.
/// `cardinality` restricts the search to one set size when positive.
inline SubsetBest best_subset(const Population& pop, const SensingGeometry& geom,
                              int cardinality = 0) {
  const auto& p = pop.params;
  const double pfa = pop.profile.design.pfa();
  const int k = pop.profile.design.k();
  const double pd = oracle::detector_pd(pfa, geom.gamma(), geom.n_samples());
  const int m = static_cast<int>(pop.users.size());
  SubsetBest best;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    const int l = std::popcount(mask);
    if (cardinality > 0 && l != cardinality) continue;
    if (l < k) continue;
    const double fa = oracle::enumerate_votes(pfa, k, l);
    const double d = oracle::enumerate_votes(pd, k, l);
    if (d < p.zeta) continue;
    const double budget = p.frame_duration - p.tau2 - p.n_samples * p.sample_interval - p.tau5 -
                          l * p.tau_r_prime;
    std::vector<double> c, lo, hi;
    bool ok = true;
    for (int j = 0; j < m && ok; ++j) {
      if (!(mask & (1u << j))) continue;
      const auto& su = pop.users[j];
      if (!(su.earn_rate > su.pay_rate)) { ok = false; break; }
      const double r = p.p_h0 * (1.0 - fa) * pop.rates[j].idle + (1.0 - p.p_h0) * (1.0 - d) * pop.rates[j].interfered;
      if (!(r > 0.0)) { ok = false; break; }
      lo.push_back(p.sensing_cost() / (r * (su.earn_rate - su.pay_rate)));
      hi.push_back(static_cast<double>(su.buffer_bits) / r);
      c.push_back(r * su.pay_rate);
      if (lo.back() > hi.back()) ok = false;
    }
    if (!ok) continue;
    const double v = oracle::box_budget_lp(c, lo, hi, budget);
    if (v > best.utility) {
      best.utility = v;
      best.mask = mask;
    }
  }
  return best;
}

inline double rel_gap(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Checks the box and budget constraints of a feasible allocation.
inline bool budget_safe(const AllocationResult& r, const AllocationContext& ctx,
                        double tol = 1e-12) {
  if (!r.feasible) return true;
  const int l = r.n_active();
  double sum = 0.0;
  for (std::size_t i = 0; i < r.active.size(); ++i) {
    if (!r.active[i]) {
      if (r.times[i] != 0.0) return false;
      continue;
    }
    sum += r.times[i];
    if (r.times[i] < ctx.lower(i, l) - tol || r.times[i] > ctx.upper(i, l) + tol) return false;
  }
  return sum <= ctx.budget(l) + tol;
}

}  // namespace fixture
