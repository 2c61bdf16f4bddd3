#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "cogalloc/allocator.hpp"
#include "cogalloc/error.hpp"
#include "fixtures.hpp"

using namespace cogalloc;
using fixture::Population;

namespace {

const SensingGeometry kGeom = SensingGeometry::from_db(-7.0, 40);

SystemParams expensive_reports() {
  SystemParams p;
  p.report_cost = 5000.0;
  return p;
}

std::vector<std::size_t> members(std::uint32_t mask, std::size_t m) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m; ++j) {
    if (mask & (1u << j)) out.push_back(j);
  }
  return out;
}

}  // namespace

TEST(CaseLabels, Names) {
  EXPECT_EQ(to_string(CaseLabel::Case1), "case1");
  EXPECT_EQ(to_string(CaseLabel::Case2), "case2");
  EXPECT_EQ(to_string(CaseLabel::Case3), "case3");
}

TEST(StrictlyBetter, RelativeMargin) {
  EXPECT_TRUE(strictly_better(1.0 + 1e-9, 1.0));
  EXPECT_FALSE(strictly_better(1.0 + 1e-14, 1.0));
  EXPECT_FALSE(strictly_better(1.0, 1.0));
  EXPECT_FALSE(strictly_better(0.5, 1.0));
}

TEST(Classify, MatchesDefinitionOnRandomSets) {
  SystemParams p;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::uint64_t buffer = seed % 3 == 0 ? 20 : 1000;
    SystemParams q = seed % 5 == 0 ? expensive_reports() : p;
    Population pop(fixture::random_users(6, seed, buffer), SensingDesign(0.3, 2), kGeom, q);
    for (std::uint32_t mask = 3; mask < 64; mask += 5) {
      const auto set = members(mask, 6);
      if (set.size() < 2) continue;
      const int l = static_cast<int>(set.size());
      double lo = 0.0, hi = 0.0;
      for (std::size_t i : set) {
        lo += pop.ctx->lower(i, l);
        hi += pop.ctx->upper(i, l);
      }
      const double t = q.frame_duration - q.tau2 - q.n_samples * q.sample_interval - q.tau5 -
                       l * q.tau_r_prime;
      const CaseLabel expect = hi <= t + kTimeSlack   ? CaseLabel::Case1
                               : lo > t + kTimeSlack ? CaseLabel::Case3
                                                     : CaseLabel::Case2;
      EXPECT_EQ(pop.ctx->classify(set), expect);
    }
  }
}

TEST(Classify, ThreeRegimes) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  EXPECT_EQ(classify_case(fixture::random_users(5, 1, 10), d, kGeom, p), CaseLabel::Case1);
  EXPECT_EQ(classify_case(fixture::random_users(5, 1, 1000), d, kGeom, p), CaseLabel::Case2);
  EXPECT_EQ(classify_case(fixture::random_users(5, 1, 1000000), d, kGeom, expensive_reports()),
            CaseLabel::Case3);
}

TEST(Classify, Preconditions) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  auto users = fixture::random_users(3, 2);
  EXPECT_THROW(classify_case({}, d, kGeom, p), PreconditionViolation);
  EXPECT_THROW(classify_case(std::span(users).first(1), d, kGeom, p), ConstraintViolation);
  users[1].earn_rate = users[1].pay_rate;
  EXPECT_THROW(classify_case(users, d, kGeom, p), PreconditionViolation);
}

TEST(Reduce, KeepsWellOrderedUsers) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  auto users = fixture::random_users(5, 3, 1000000);
  EXPECT_EQ(reduce_feasible_set(users, d, kGeom, p).size(), 5u);

  // B (b - a) below the sensing cost puts the break-even time past the
  // buffer-clearing time at every L.
  users[2].earn_rate = users[2].pay_rate + 1e-6;
  users[2].buffer_bits = 1000;
  users[4].earn_rate = users[4].pay_rate;
  const auto kept = reduce_feasible_set(users, d, kGeom, p);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].id, 0u);
  EXPECT_EQ(kept[1].id, 1u);
  EXPECT_EQ(kept[2].id, 3u);
  EXPECT_TRUE(reduce_feasible_set({}, d, kGeom, p).empty());
}

TEST(Waterfill, HandTrace) {
  const std::vector<double> lo{1, 2}, hi{5, 6}, pay{2, 1};
  const std::vector<std::uint32_t> ids{0, 1};
  const auto t = waterfill_times(lo, hi, pay, ids, 10.0);
  EXPECT_DOUBLE_EQ(t[0], 5.0);
  EXPECT_DOUBLE_EQ(t[1], 5.0);
  std::vector<double> c(pay), l(lo), h(hi), arg;
  EXPECT_DOUBLE_EQ(oracle::box_budget_lp(c, l, h, 10.0, &arg), 2 * 5.0 + 1 * 5.0);
}

TEST(Waterfill, NoRemainingTimeLeavesLowerBounds) {
  const std::vector<double> lo{1, 2, 3}, hi{5, 6, 7}, pay{3, 2, 1};
  const std::vector<std::uint32_t> ids{0, 1, 2};
  const auto t = waterfill_times(lo, hi, pay, ids, 6.0);
  EXPECT_EQ(t, lo);
}

TEST(Waterfill, EqualPaymentsGoToLowestId) {
  const std::vector<double> lo{0, 0, 0}, hi{4, 4, 4}, pay{1, 1, 1};
  const std::vector<std::uint32_t> ids{7, 3, 5};
  const auto t = waterfill_times(lo, hi, pay, ids, 6.0);
  EXPECT_DOUBLE_EQ(t[1], 4.0);
  EXPECT_DOUBLE_EQ(t[2], 2.0);
  EXPECT_DOUBLE_EQ(t[0], 0.0);
}

TEST(Waterfill, MatchesLpOracle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1200; ++trial) {
    const std::size_t n = 1 + trial % 7;
    std::vector<double> lo(n), hi(n), pay(n);
    std::vector<std::uint32_t> ids(n);
    double sum_lo = 0.0, sum_hi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = u(gen);
      hi[j] = lo[j] + 2.0 * u(gen);
      pay[j] = trial % 4 == 0 ? std::floor(3.0 * u(gen)) : u(gen);
      ids[j] = static_cast<std::uint32_t>(j);
      sum_lo += lo[j];
      sum_hi += hi[j];
    }
    const double budget = sum_lo + (sum_hi - sum_lo) * u(gen);
    const auto t = waterfill_times(lo, hi, pay, ids, budget);
    double got = 0.0, used = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      got += pay[j] * t[j];
      used += t[j];
      EXPECT_GE(t[j], lo[j]);
      EXPECT_LE(t[j], hi[j]);
    }
    EXPECT_NEAR(used, std::min(budget, sum_hi), 1e-12);
    const double best = oracle::box_budget_lp(pay, lo, hi, budget);
    EXPECT_LE(fixture::rel_gap(got, best), 1e-9) << "trial " << trial;
  }
}

TEST(Waterfill, RequiresCase2) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  EXPECT_THROW(waterfill_allocate(fixture::random_users(4, 1, 10), d, kGeom, p),
               PreconditionViolation);
  const auto r = waterfill_allocate(fixture::random_users(5, 1, 1000), d, kGeom, p);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.case_label, CaseLabel::Case2);
  EXPECT_NEAR(std::accumulate(r.times.begin(), r.times.end(), 0.0), effective_time(p, 5), 1e-12);
}

TEST(Exchange, EmptyExcludedReturnsKept) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  const auto users = fixture::random_users(4, 9);
  const auto ex = exchange_search(users, {}, d, kGeom, p);
  ASSERT_EQ(ex.best_set.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ex.best_set[i].id, users[i].id);
}

TEST(Exchange, SingleSwap) {
  const SensingDesign d(0.3, 1);
  SystemParams p;
  auto users = fixture::random_users(2, 4);
  users[1].gain_to_fc = users[0].gain_to_fc * 3.0;
  const auto ex = exchange_search(std::span(users).first(1), std::span(users).last(1), d, kGeom, p);
  ASSERT_EQ(ex.best_set.size(), 1u);
  EXPECT_EQ(ex.best_set[0].id, 1u);
}

TEST(Exchange, Preconditions) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  const auto users = fixture::random_users(4, 9);
  EXPECT_THROW(exchange_search(std::span(users).first(3), std::span(users).last(2), d, kGeom, p),
               PreconditionViolation);
  EXPECT_THROW(exchange_search(std::span(users).first(1), std::span(users).last(2), d, kGeom, p),
               ConstraintViolation);
}

TEST(Exchange, MatchesSameSizeEnumeration) {
  const SensingDesign d(0.2, 1);
  SystemParams p;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const std::uint64_t buffer = 100 + 300 * (seed % 5);
    // Excluded users are the weakest, as elimination leaves them.
    auto users = fixture::random_users(5, 1000 + seed, buffer);
    std::stable_sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
      return a.gain_to_fc > b.gain_to_fc;
    });
    const auto ex =
        exchange_search(std::span(users).first(3), std::span(users).last(2), d, kGeom, p);
    Population pop(users, d, kGeom, p);
    const auto best = fixture::best_subset(pop, kGeom, 3);
    if (!ex.allocation.feasible) {
      EXPECT_EQ(best.utility, -std::numeric_limits<double>::infinity());
      continue;
    }
    EXPECT_LE(fixture::rel_gap(ex.allocation.fc_utility, best.utility), 1e-9) << "seed " << seed;
  }
}

TEST(SelectAndAllocate, AbundantTimeClearsEveryBuffer) {
  const SensingDesign d(0.3, 2);
  SystemParams p;
  const auto users = fixture::random_users(5, 21, 10);
  const auto r = select_and_allocate(users, d, kGeom, p);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.case_label, CaseLabel::Case1);
  double sum_ab = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    EXPECT_TRUE(r.active[i]);
    EXPECT_NEAR(r.times[i] * r.rates[i], 10.0, 1e-9);
    sum_ab += users[i].pay_rate * users[i].buffer_bits;
  }
  EXPECT_NEAR(r.fc_utility, sum_ab, 1e-12);
}

TEST(SelectAndAllocate, UnreachableFloorIsInfeasible) {
  const SensingDesign d(0.1, 3);
  SystemParams p;
  p.zeta = 0.9999;
  const auto r = select_and_allocate(fixture::random_users(5, 2), d, kGeom, p);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.n_active(), 0);
  EXPECT_TRUE(select_and_allocate({}, d, kGeom, SystemParams{}).feasible == false);
}

TEST(SelectAndAllocate, CongestedFullSetMatchesSubsetOracle) {
  SystemParams p;
  p.report_cost = 1200.0;
  int congested = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto users = fixture::random_users(5, 300 + seed, 1000000);
    const SensingDesign d(0.2, 1);
    Population pop(users, d, kGeom, p);
    if (pop.ctx->classify(pop.all()) != CaseLabel::Case3) continue;
    ++congested;
    const auto r = select_and_allocate(users, d, kGeom, p);
    const auto best = fixture::best_subset(pop, kGeom);
    ASSERT_EQ(r.feasible, std::isfinite(best.utility)) << "seed " << seed;
    if (r.feasible) {
      EXPECT_LE(fixture::rel_gap(r.fc_utility, best.utility), 1e-9) << "seed " << seed;
    }
  }
  EXPECT_GT(congested, 10);
}

TEST(SelectAndAllocate, IdenticalCostsMatchSubsetOracle) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    SystemParams p;
    p.zeta = 0.6 + 0.05 * static_cast<double>(seed % 8);
    const std::size_t m = 2 + seed % 5;
    const std::uint64_t buffer = seed % 7 == 0 ? 30 : 1000 + 2000 * (seed % 3);
    const auto users = fixture::random_users(m, 5000 + seed, buffer);
    const SensingDesign d(0.1 * (1 + seed % 9), 1 + static_cast<int>(seed % 3));
    Population pop(users, d, kGeom, p);
    const auto r = select_and_allocate(*pop.ctx);
    const auto best = fixture::best_subset(pop, kGeom);
    ASSERT_EQ(r.feasible, std::isfinite(best.utility)) << "seed " << seed;
    if (r.feasible) {
      EXPECT_LE(fixture::rel_gap(r.fc_utility, best.utility), 1e-9) << "seed " << seed;
      EXPECT_TRUE(fixture::budget_safe(r, *pop.ctx));
    }
  }
}

TEST(Invariants, BudgetSafetyHeterogeneousCosts) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemParams p;
  for (int trial = 0; trial < 300; ++trial) {
    auto users = fixture::random_users(6, 9000 + trial, 200 + trial * 13);
    for (auto& su : users) {
      su.pay_rate = 0.05 + 0.3 * u(gen);
      su.earn_rate = su.pay_rate + 10.0 * u(gen);
    }
    const SensingDesign d(0.1 + 0.8 * u(gen), 1 + trial % 3);
    Population pop(users, d, kGeom, p);
    const auto r = select_and_allocate(*pop.ctx);
    EXPECT_TRUE(fixture::budget_safe(r, *pop.ctx)) << "trial " << trial;
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (r.times[i] > 0.0) EXPECT_TRUE(r.active[i]);
      EXPECT_GE(r.su_utilities[i], 0.0);
    }
  }
}

TEST(SelectionProperties, AbundantTimeRemovalLosesUtility) {
  SystemParams p;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t m = 3 + seed % 4;
    const auto users = fixture::random_users(m, 700 + seed, 10 + seed);
    const SensingDesign d(0.3, 1);
    Population pop(users, d, kGeom, p);
    const auto full = pop.all();
    if (pop.ctx->classify(full) != CaseLabel::Case1) continue;
    const auto whole = pop.ctx->evaluate(full);
    for (std::size_t drop = 0; drop < m; ++drop) {
      std::vector<std::size_t> rest;
      for (std::size_t i : full) if (i != drop) rest.push_back(i);
      const auto part = pop.ctx->evaluate(rest);
      ASSERT_TRUE(part.feasible);
      EXPECT_LT(part.fc_utility, whole.fc_utility);
      EXPECT_NEAR(whole.fc_utility - part.fc_utility,
                  users[drop].pay_rate * static_cast<double>(users[drop].buffer_bits), 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(SelectionProperties, EliminatingLowestPaymentIsBestSingleRemoval) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    SystemParams p;
    p.zeta = 0.6;
    const std::size_t m = 3 + seed % 4;
    const auto users = fixture::random_users(m, 11000 + seed, 800 + 200 * (seed % 6));
    const SensingDesign d(0.1 * (1 + seed % 5), 1);
    Population pop(users, d, kGeom, p);
    const auto full = pop.all();
    const auto floor = pop.ctx->min_users();
    if (!floor || static_cast<int>(m) - 1 < *floor) continue;
    if (pop.ctx->classify(full) != CaseLabel::Case2) continue;
    const int l = static_cast<int>(m);
    std::size_t weakest = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (pop.ctx->payment(i, l) < pop.ctx->payment(weakest, l)) weakest = i;
    }
    auto without = [&](std::size_t drop) {
      std::vector<std::size_t> rest;
      for (std::size_t i : full) if (i != drop) rest.push_back(i);
      return rest;
    };
    const auto after = without(weakest);
    if (pop.ctx->classify(after) != CaseLabel::Case2) continue;
    const double chosen = pop.ctx->evaluate(after).fc_utility;
    EXPECT_GT(chosen, pop.ctx->evaluate(full).fc_utility) << "seed " << seed;
    for (std::size_t drop = 0; drop < m; ++drop) {
      const auto alt = pop.ctx->evaluate(without(drop));
      if (alt.feasible) EXPECT_GE(chosen, alt.fc_utility * (1.0 - 1e-12)) << "seed " << seed;
    }
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(SelectionProperties, ContestedExtremeSwapsBoundDeeperSwaps) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    SystemParams p;
    p.zeta = 0.6;
    const std::size_t m = 4 + seed % 3;
    auto users = fixture::random_users(m, 21000 + seed, 600 + 300 * (seed % 5));
    std::stable_sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
      return a.gain_to_fc > b.gain_to_fc;
    });
    const SensingDesign d(0.1 * (1 + seed % 4), 1);
    Population pop(users, d, kGeom, p);
    const std::size_t kept_n = 2 + seed % (m - 2);
    std::vector<std::size_t> kept, excl;
    for (std::size_t i = 0; i < m; ++i) (i < kept_n ? kept : excl).push_back(i);
    const int l = static_cast<int>(kept_n);
    auto by_lower = [&](std::vector<std::size_t> v) {
      std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
        return pop.ctx->lower(a, l) > pop.ctx->lower(b, l);
      });
      return v;
    };
    const auto kl = by_lower(kept), el = by_lower(excl);
    auto swap_set = [&](std::vector<std::size_t> out, std::vector<std::size_t> in) {
      std::vector<std::size_t> s;
      for (std::size_t i : kept) if (std::find(out.begin(), out.end(), i) == out.end()) s.push_back(i);
      s.insert(s.end(), in.begin(), in.end());
      std::sort(s.begin(), s.end());
      return s;
    };
    // Best over all swaps of exactly depth n, by enumeration.
    auto best_at = [&](std::size_t n) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::uint32_t om = 0; om < (1u << kept.size()); ++om) {
        if (std::popcount(om) != static_cast<int>(n)) continue;
        for (std::uint32_t im = 0; im < (1u << excl.size()); ++im) {
          if (std::popcount(im) != static_cast<int>(n)) continue;
          std::vector<std::size_t> out, in;
          for (std::size_t j = 0; j < kept.size(); ++j) if (om & (1u << j)) out.push_back(kept[j]);
          for (std::size_t j = 0; j < excl.size(); ++j) if (im & (1u << j)) in.push_back(excl[j]);
          const auto r = pop.ctx->evaluate(swap_set(out, in));
          if (r.feasible) best = std::max(best, r.fc_utility);
        }
      }
      return best;
    };
    const std::size_t depth = std::min(kept.size(), excl.size());
    for (std::size_t n = 1; n < depth; ++n) {
      const auto g3 = swap_set({kl.end() - n, kl.end()}, {el.begin(), el.begin() + n});
      const auto g4 = swap_set({kl.begin(), kl.begin() + n}, {el.end() - n, el.end()});
      if (pop.ctx->classify(g3) != CaseLabel::Case2 || pop.ctx->classify(g4) != CaseLabel::Case2) {
        continue;
      }
      const double here = best_at(n);
      for (std::size_t deeper = n + 1; deeper <= depth; ++deeper) {
        EXPECT_LE(best_at(deeper), here * (1.0 + 1e-12)) << "seed " << seed << " n " << n;
      }
      ++checked;
      break;
    }
  }
  EXPECT_GT(checked, 20);
}
