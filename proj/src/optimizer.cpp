#include "cogalloc/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "cogalloc/error.hpp"

namespace cogalloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_inputs(std::span<const SecondaryUser> all_sus, const SystemParams& params) {
  params.validate();
  for (const auto& su : all_sus) su.validate();
}

std::vector<LinkRates> rates_of(std::span<const SecondaryUser> users,
                                const SystemParams& params) {
  std::vector<LinkRates> rates;
  rates.reserve(users.size());
  for (const auto& su : users) rates.push_back(link_rates(su, params));
  return rates;
}

}  // namespace

DesignGrid::DesignGrid(std::vector<double> pfa_values, std::optional<int> k_max)
    : pfa_(std::move(pfa_values)), k_max_(k_max) {
  if (pfa_.empty()) throw DomainError("DesignGrid: no pfa values");
  std::sort(pfa_.begin(), pfa_.end());
  for (std::size_t i = 0; i < pfa_.size(); ++i) {
    if (!(pfa_[i] > 0.0 && pfa_[i] < 1.0)) {
      throw DomainError("DesignGrid: pfa values must lie in (0, 1)");
    }
    if (i > 0 && pfa_[i] == pfa_[i - 1]) throw DomainError("DesignGrid: duplicate pfa value");
  }
  if (k_max && *k_max < 1) throw DomainError("DesignGrid: k_max must be >= 1");
}

DesignGrid DesignGrid::uniform(int divisions, std::optional<int> k_max) {
  if (divisions < 2) throw DomainError("DesignGrid: need at least 2 divisions");
  std::vector<double> values;
  for (int i = 1; i < divisions; ++i) values.push_back(static_cast<double>(i) / divisions);
  return DesignGrid(std::move(values), k_max);
}

int DesignGrid::k_limit(int m_total) const {
  return k_max_ ? std::min(*k_max_, m_total) : m_total;
}

OptimizationOutcome joint_optimize(std::span<const SecondaryUser> all_sus,
                                   const SensingGeometry& geom, const SystemParams& params,
                                   const DesignGrid& grid) {
  const auto start = Clock::now();
  validate_inputs(all_sus, params);
  const int m = static_cast<int>(all_sus.size());
  OptimizationOutcome out;
  out.best_allocation = AllocationResult::infeasible(all_sus.size(), CaseLabel::Case3);
  if (m == 0 || grid.pfa_values().empty()) {
    out.wall_time = seconds_since(start);
    return out;
  }

  const auto rates = rates_of(all_sus, params);
  const int k_limit = grid.k_limit(m);
  for (double pfa : grid.pfa_values()) {
    const double pd = local_pd(pfa, geom);
    const auto fa_tails = binomial_tail_table(pfa, m);
    const auto d_tails = binomial_tail_table(pd, m);
    bool detection_reachable = true;
    for (int k = 1; k <= k_limit; ++k) {
      GridPoint point{pfa, k, false, 0.0};
      // Fused detection only falls as k grows, so once the floor is out of
      // reach with every SU reporting it stays out of reach.
      if (detection_reachable) {
        const SensingDesign design(pfa, k);
        const auto profile = FusionProfile::from_tails(design, pd, fa_tails, d_tails);
        if (profile.detection[m] < params.zeta) {
          detection_reachable = false;
        } else {
          const AllocationContext ctx(all_sus, rates, profile, params);
          AllocationResult result = select_and_allocate(ctx);
          point.feasible = result.feasible;
          point.fc_utility = result.fc_utility;
          if (result.feasible &&
              (!out.feasible || strictly_better(result.fc_utility, out.best_allocation.fc_utility))) {
            out.feasible = true;
            out.best_design = design;
            out.best_allocation = std::move(result);
          }
        }
      }
      out.utility_surface.push_back(point);
    }
  }
  out.wall_time = seconds_since(start);
  return out;
}

OptimizationOutcome exhaustive_oracle(std::span<const SecondaryUser> all_sus,
                                      const SensingGeometry& geom,
                                      const SystemParams& params, const DesignGrid& grid,
                                      std::size_t cap) {
  const auto start = Clock::now();
  validate_inputs(all_sus, params);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < all_sus.size(); ++i) {
    if (all_sus[i].profitable()) members.push_back(i);
  }
  if (members.size() > cap) {
    throw CapacityError("exhaustive_oracle: " + std::to_string(members.size()) +
                        " candidate SUs exceed the cap of " + std::to_string(cap));
  }

  OptimizationOutcome out;
  out.best_allocation = AllocationResult::infeasible(all_sus.size(), CaseLabel::Case3);
  const int n = static_cast<int>(members.size());
  std::vector<double> r0(n), r1(n);
  for (int j = 0; j < n; ++j) {
    r0[j] = rate_idle(all_sus[members[j]], params);
    r1[j] = rate_interfered(all_sus[members[j]], params);
  }
  const double cost = params.sensing_cost();

  struct Slot {
    int member;
    double rate, lo, hi, pay;
  };
  std::vector<Slot> slots;
  std::vector<double> fused_fa(n + 1), fused_d(n + 1);
  const int k_limit = grid.k_limit(n);

  for (double pfa : grid.pfa_values()) {
    const double pd_local = local_pd(pfa, geom);
    for (int k = 1; k <= k_limit; ++k) {
      GridPoint point{pfa, k, false, 0.0};
      for (int l = k; l <= n; ++l) {
        fused_fa[l] = binomial_upper_tail(pfa, k, l);
        fused_d[l] = binomial_upper_tail(pd_local, k, l);
      }
      const std::uint32_t subsets = std::uint32_t{1} << n;
      for (std::uint32_t mask = 1; mask < subsets; ++mask) {
        const int l = std::popcount(mask);
        if (l < k || fused_d[l] < params.zeta) continue;
        const double idle_w = params.p_h0 * (1.0 - fused_fa[l]);
        const double busy_w = params.p_h1() * (1.0 - fused_d[l]);
        const double budget = params.frame_duration - params.tau2 -
                              params.n_samples * params.sample_interval - params.tau5 -
                              l * params.tau_r_prime;
        slots.clear();
        bool boxes_ok = true;
        double sum_lo = 0.0;
        double sum_hi = 0.0;
        for (int j = 0; j < n && boxes_ok; ++j) {
          if (!(mask & (std::uint32_t{1} << j))) continue;
          const SecondaryUser& su = all_sus[members[j]];
          const double rate = idle_w * r0[j] + busy_w * r1[j];
          const double lo = cost / (rate * (su.earn_rate - su.pay_rate));
          const double hi = static_cast<double>(su.buffer_bits) / rate;
          boxes_ok = lo <= hi;
          sum_lo += lo;
          sum_hi += hi;
          slots.push_back({j, rate, lo, hi, rate * su.pay_rate});
        }
        if (!boxes_ok || sum_lo > budget + kTimeSlack) continue;

        // Linear objective over a box with one budget row: start at the
        // lower corner and spend what is left on the best coefficients.
        std::stable_sort(slots.begin(), slots.end(), [&](const Slot& a, const Slot& b) {
          if (a.pay != b.pay) return a.pay > b.pay;
          return all_sus[members[a.member]].id < all_sus[members[b.member]].id;
        });
        double left = budget - sum_lo;
        double utility = 0.0;
        std::vector<double> t(slots.size());
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const double extra = std::clamp(left, 0.0, slots[s].hi - slots[s].lo);
          left -= extra;
          t[s] = slots[s].lo + extra;
          utility += slots[s].pay * t[s];
        }
        if (!point.feasible || strictly_better(utility, point.fc_utility)) {
          point.feasible = true;
          point.fc_utility = utility;
        }
        if (!out.feasible || strictly_better(utility, out.best_allocation.fc_utility)) {
          AllocationResult r = AllocationResult::infeasible(all_sus.size(), CaseLabel::Case2);
          r.case_label = sum_hi <= budget + kTimeSlack ? CaseLabel::Case1 : CaseLabel::Case2;
          r.feasible = true;
          r.fc_utility = utility;
          for (std::size_t s = 0; s < slots.size(); ++s) {
            const std::size_t i = members[slots[s].member];
            r.active[i] = true;
            r.times[i] = t[s];
            r.rates[i] = slots[s].rate;
            r.su_utilities[i] = su_utility(slots[s].rate, all_sus[i], params, t[s], true);
          }
          out.feasible = true;
          out.best_design = SensingDesign(pfa, k);
          out.best_allocation = std::move(r);
        }
      }
      out.utility_surface.push_back(point);
    }
  }
  out.wall_time = seconds_since(start);
  return out;
}

NonJointOutcome nonjoint_baseline(std::span<const SecondaryUser> all_sus,
                                  const SensingGeometry& geom, const SystemParams& params,
                                  const DesignGrid& grid) {
  const auto start = Clock::now();
  validate_inputs(all_sus, params);
  NonJointOutcome report;
  report.su_utilities.assign(all_sus.size(), 0.0);
  OptimizationOutcome& out = report.outcome;
  out.best_allocation = AllocationResult::infeasible(all_sus.size(), CaseLabel::Case3);

  const double cost = params.sensing_cost();
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < all_sus.size(); ++i) {
    const SecondaryUser& su = all_sus[i];
    if (static_cast<double>(su.buffer_bits) * (su.earn_rate - su.pay_rate) - cost >= 0.0) {
      members.push_back(i);
    }
  }
  const int l = static_cast<int>(members.size());
  if (l == 0) {
    out.wall_time = seconds_since(start);
    return report;
  }

  // Stage 1: lowest fused false alarm meeting the floor. Near-ties go to the
  // smaller pfa, then to the larger k.
  std::optional<SensingDesign> chosen;
  double chosen_fa = 0.0;
  for (double pfa : grid.pfa_values()) {
    for (int k = 1; k <= grid.k_limit(l); ++k) {
      const SensingDesign design(pfa, k);
      const double pd = global_pd(design, geom, l);
      const double fa = global_pfa(design, l);
      const bool ok = pd >= params.zeta;
      out.utility_surface.push_back({pfa, k, ok, 0.0});
      if (!ok) continue;
      const bool better = !chosen || strictly_better(chosen_fa, fa) ||
                          (!strictly_better(fa, chosen_fa) && pfa == chosen->pfa());
      if (better) {
        chosen = design;
        chosen_fa = fa;
      }
    }
  }
  if (!chosen) {
    out.wall_time = seconds_since(start);
    return report;
  }

  // Stage 2: every member active, break-even bound dropped.
  const double fa = global_pfa(*chosen, l);
  const double pd = global_pd(*chosen, geom, l);
  std::vector<double> lo(members.size(), 0.0), hi, pay, rate;
  std::vector<std::uint32_t> ids;
  for (std::size_t i : members) {
    const SecondaryUser& su = all_sus[i];
    const double r = effective_rate(link_rates(su, params), fa, pd, params.p_h0);
    rate.push_back(r);
    hi.push_back(r > 0.0 ? time_upper_bound(r, su) : 0.0);
    pay.push_back(r * su.pay_rate);
    ids.push_back(su.id);
  }
  const double budget = std::max(0.0, effective_time(params, l));
  const auto times = waterfill_times(lo, hi, pay, ids, budget);

  AllocationResult& r = out.best_allocation;
  double sum_hi = 0.0;
  for (std::size_t p = 0; p < members.size(); ++p) {
    const std::size_t i = members[p];
    r.active[i] = true;
    r.times[i] = times[p];
    r.rates[i] = rate[p];
    r.su_utilities[i] = su_utility(rate[p], all_sus[i], params, times[p], true);
    r.fc_utility += pay[p] * times[p];
    sum_hi += hi[p];
  }
  r.feasible = true;
  r.case_label = sum_hi <= budget + kTimeSlack ? CaseLabel::Case1 : CaseLabel::Case2;
  for (auto& point : out.utility_surface) {
    if (point.pfa == chosen->pfa() && point.k == chosen->k()) point.fc_utility = r.fc_utility;
  }
  report.su_utilities = r.su_utilities;
  out.feasible = true;
  out.best_design = chosen;
  out.wall_time = seconds_since(start);
  return report;
}

int count_negative_utility(std::span<const double> su_utilities) {
  return static_cast<int>(
      std::count_if(su_utilities.begin(), su_utilities.end(), [](double u) { return u < 0.0; }));
}

int count_negative_utility(const NonJointOutcome& report) {
  return count_negative_utility(report.su_utilities);
}

int count_negative_utility(const AllocationResult& allocation) {
  return count_negative_utility(allocation.su_utilities);
}

}  // namespace cogalloc
