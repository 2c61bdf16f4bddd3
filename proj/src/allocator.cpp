#include "cogalloc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "cogalloc/error.hpp"

namespace cogalloc {

std::string_view to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::Case1: return "case1";
    case CaseLabel::Case2: return "case2";
    case CaseLabel::Case3: return "case3";
  }
  return "unknown";
}

bool strictly_better(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return a - b > 1e-12 * scale;
}

AllocationResult AllocationResult::infeasible(std::size_t population, CaseLabel label) {
  AllocationResult r;
  r.active.assign(population, false);
  r.times.assign(population, 0.0);
  r.rates.assign(population, 0.0);
  r.su_utilities.assign(population, 0.0);
  r.case_label = label;
  r.feasible = false;
  return r;
}

int AllocationResult::n_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

std::vector<std::size_t> AllocationResult::selected() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) out.push_back(i);
  }
  return out;
}

AllocationContext::AllocationContext(std::span<const SecondaryUser> users,
                                     std::span<const LinkRates> rates,
                                     const FusionProfile& profile,
                                     const SystemParams& params)
    : users_(users), rates_(rates), profile_(profile), params_(params) {
  if (users.size() != rates.size()) {
    throw PreconditionViolation("AllocationContext: users and rates differ in length");
  }
  if (profile.max_users() < static_cast<int>(users.size())) {
    throw PreconditionViolation("AllocationContext: fusion profile too short");
  }
}

double AllocationContext::rate(std::size_t i, int l) const {
  if (l < profile_.design.k() || l > profile_.max_users()) {
    throw ConstraintViolation("AllocationContext: L=" + std::to_string(l) +
                              " outside [k, max_users]");
  }
  return effective_rate(rates_[i], profile_.false_alarm[l], profile_.detection[l],
                        params_.p_h0);
}

double AllocationContext::lower(std::size_t i, int l) const {
  const auto lb = time_lower_bound(rate(i, l), users_[i], params_);
  return lb ? *lb : std::numeric_limits<double>::infinity();
}

double AllocationContext::upper(std::size_t i, int l) const {
  const double r = rate(i, l);
  // Fusion saturates to a zero rate at extreme designs; nothing can be sent.
  if (!(r > 0.0)) return std::numeric_limits<double>::infinity();
  return time_upper_bound(r, users_[i]);
}

std::optional<int> AllocationContext::min_users() const {
  return profile_.min_active(params_.zeta, static_cast<int>(size()));
}

std::vector<std::size_t> AllocationContext::reduce() const {
  const int full = static_cast<int>(size());
  const bool rates_defined = profile_.design.k() <= full;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < size(); ++i) {
    const SecondaryUser& su = users_[i];
    if (!su.profitable()) continue;
    // Both bounds scale with 1/R, so when k > |G| the rate-free form decides.
    const bool ordered =
        rates_defined ? lower(i, full) < upper(i, full)
                      : params_.sensing_cost() <
                            static_cast<double>(su.buffer_bits) * (su.earn_rate - su.pay_rate);
    if (ordered) kept.push_back(i);
  }
  return kept;
}

CaseLabel AllocationContext::classify(std::span<const std::size_t> set) const {
  const int l = static_cast<int>(set.size());
  double sum_lower = 0.0;
  double sum_upper = 0.0;
  for (std::size_t i : set) {
    sum_lower += lower(i, l);
    sum_upper += upper(i, l);
  }
  const double t = budget(l);
  if (sum_upper <= t + kTimeSlack) return CaseLabel::Case1;
  if (sum_lower > t + kTimeSlack) return CaseLabel::Case3;
  return CaseLabel::Case2;
}

AllocationResult AllocationContext::finish(std::span<const std::size_t> set,
                                           std::vector<double> times,
                                           CaseLabel label) const {
  const int l = static_cast<int>(set.size());
  AllocationResult r = AllocationResult::infeasible(size(), label);
  for (std::size_t pos = 0; pos < set.size(); ++pos) {
    const std::size_t i = set[pos];
    const double rate_i = rate(i, l);
    r.active[i] = true;
    r.times[i] = times[pos];
    r.rates[i] = rate_i;
    r.su_utilities[i] = su_utility(rate_i, users_[i], params_, times[pos], true);
    r.fc_utility += rate_i * users_[i].pay_rate * times[pos];
  }
  r.feasible = true;
  return r;
}

AllocationResult AllocationContext::allocate_upper(std::span<const std::size_t> set) const {
  const int l = static_cast<int>(set.size());
  std::vector<double> times;
  times.reserve(set.size());
  for (std::size_t i : set) times.push_back(upper(i, l));
  return finish(set, std::move(times), CaseLabel::Case1);
}

AllocationResult AllocationContext::allocate_waterfill(std::span<const std::size_t> set) const {
  const int l = static_cast<int>(set.size());
  std::vector<double> lo, hi, pay;
  std::vector<std::uint32_t> ids;
  lo.reserve(set.size());
  hi.reserve(set.size());
  pay.reserve(set.size());
  ids.reserve(set.size());
  for (std::size_t i : set) {
    const double rate_i = rate(i, l);
    lo.push_back(*time_lower_bound(rate_i, users_[i], params_));
    hi.push_back(time_upper_bound(rate_i, users_[i]));
    pay.push_back(rate_i * users_[i].pay_rate);
    ids.push_back(users_[i].id);
  }
  return finish(set, waterfill_times(lo, hi, pay, ids, budget(l)), CaseLabel::Case2);
}

AllocationResult AllocationContext::evaluate(std::span<const std::size_t> set) const {
  if (set.empty()) return AllocationResult::infeasible(size(), CaseLabel::Case3);
  switch (classify(set)) {
    case CaseLabel::Case1: return allocate_upper(set);
    case CaseLabel::Case2: return allocate_waterfill(set);
    case CaseLabel::Case3: break;
  }
  return AllocationResult::infeasible(size(), CaseLabel::Case3);
}

std::vector<double> waterfill_times(std::span<const double> lower,
                                    std::span<const double> upper,
                                    std::span<const double> payment,
                                    std::span<const std::uint32_t> ids, double budget) {
  const std::size_t n = lower.size();
  if (upper.size() != n || payment.size() != n || ids.size() != n) {
    throw PreconditionViolation("waterfill_times: member vectors differ in length");
  }
  std::vector<double> times(lower.begin(), lower.end());
  double remaining = budget;
  for (double t : lower) remaining -= t;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (payment[a] != payment[b]) return payment[a] > payment[b];
    return ids[a] < ids[b];
  });
  for (std::size_t j : order) {
    if (remaining <= 0.0) break;
    const double grant = std::min(upper[j] - lower[j], remaining);
    times[j] += grant;
    remaining -= grant;
  }
  return times;
}

namespace {

// Best feasible allocation seen so far; ties keep the earlier offer.
class Incumbent {
 public:
  void offer(AllocationResult candidate, std::vector<std::size_t> set) {
    if (!candidate.feasible) return;
    if (!best_ || strictly_better(candidate.fc_utility, best_->fc_utility)) {
      best_ = std::move(candidate);
      set_ = std::move(set);
    }
  }
  bool empty() const { return !best_.has_value(); }
  const std::vector<std::size_t>& set() const { return set_; }
  AllocationResult take(std::size_t population) {
    if (!best_) return AllocationResult::infeasible(population, CaseLabel::Case3);
    return std::move(*best_);
  }

 private:
  std::optional<AllocationResult> best_;
  std::vector<std::size_t> set_;
};

// Members sorted by a key in descending order, ties to the lower SU id.
template <typename Key>
std::vector<std::size_t> descending(const AllocationContext& ctx,
                                    std::span<const std::size_t> members, Key key) {
  std::vector<std::size_t> order(members.begin(), members.end());
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(order.size());
  for (std::size_t i : order) keyed.emplace_back(key(i), i);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return ctx.user(a.second).id < ctx.user(b.second).id;
  });
  for (std::size_t p = 0; p < keyed.size(); ++p) order[p] = keyed[p].second;
  return order;
}

// kept with `out` removed and `in` added, in ascending index order.
std::vector<std::size_t> swapped(std::span<const std::size_t> kept,
                                 std::span<const std::size_t> out,
                                 std::span<const std::size_t> in) {
  std::vector<std::size_t> result;
  result.reserve(kept.size());
  for (std::size_t i : kept) {
    if (std::find(out.begin(), out.end(), i) == out.end()) result.push_back(i);
  }
  result.insert(result.end(), in.begin(), in.end());
  std::sort(result.begin(), result.end());
  return result;
}

// Swap taking n members from the tail (or head) of each ordering.
std::vector<std::size_t> extreme_swap(std::span<const std::size_t> kept,
                                      const std::vector<std::size_t>& kept_order,
                                      const std::vector<std::size_t>& excl_order,
                                      std::size_t n, bool drop_tail_of_kept) {
  std::span<const std::size_t> ko(kept_order);
  std::span<const std::size_t> eo(excl_order);
  if (drop_tail_of_kept) {
    return swapped(kept, ko.subspan(ko.size() - n), eo.first(n));
  }
  return swapped(kept, ko.first(n), eo.subspan(eo.size() - n));
}

// Calls visit(combination) for every n-subset of items in lexicographic order.
template <typename Visit>
void for_each_combination(std::span<const std::size_t> items, std::size_t n, Visit visit) {
  if (n > items.size()) return;
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::vector<std::size_t> chosen(n);
  while (true) {
    for (std::size_t p = 0; p < n; ++p) chosen[p] = items[pos[p]];
    visit(std::span<const std::size_t>(chosen));
    std::size_t p = n;
    while (p > 0 && pos[p - 1] == items.size() - n + (p - 1)) --p;
    if (p == 0) return;
    ++pos[p - 1];
    for (std::size_t q = p; q < n; ++q) pos[q] = pos[q - 1] + 1;
  }
}

}  // namespace

ExchangeOutcome exchange_search(const AllocationContext& ctx,
                                std::span<const std::size_t> kept,
                                std::span<const std::size_t> excluded) {
  Incumbent best;
  std::vector<std::size_t> kept_sorted(kept.begin(), kept.end());
  std::sort(kept_sorted.begin(), kept_sorted.end());
  best.offer(ctx.evaluate(kept_sorted), kept_sorted);

  const int l = static_cast<int>(kept.size());
  auto by_upper = [&](std::size_t i) { return ctx.upper(i, l); };
  auto by_lower = [&](std::size_t i) { return ctx.lower(i, l); };
  auto by_buffer = [&](std::size_t i) { return static_cast<double>(ctx.user(i).buffer_bits); };
  auto by_payment = [&](std::size_t i) { return ctx.payment(i, l); };

  const auto kept_ub = descending(ctx, kept, by_upper);
  const auto excl_ub = descending(ctx, excluded, by_upper);
  const auto kept_lb = descending(ctx, kept, by_lower);
  const auto excl_lb = descending(ctx, excluded, by_lower);
  const auto kept_buf = descending(ctx, kept, by_buffer);
  const auto excl_buf = descending(ctx, excluded, by_buffer);
  const auto kept_pay = descending(ctx, kept, by_payment);
  const auto excl_pay = descending(ctx, excluded, by_payment);

  const std::size_t depth = std::min(kept.size(), excluded.size());
  for (std::size_t n = 1; n <= depth; ++n) {
    const auto g1 = extreme_swap(kept, kept_ub, excl_ub, n, true);
    const auto g2 = extreme_swap(kept, kept_ub, excl_ub, n, false);
    if (ctx.classify(g1) == CaseLabel::Case1 && ctx.classify(g2) == CaseLabel::Case1) {
      auto g5 = extreme_swap(kept, kept_buf, excl_buf, n, true);
      best.offer(ctx.allocate_upper(g5), g5);
      continue;
    }
    const auto g3 = extreme_swap(kept, kept_lb, excl_lb, n, true);
    const auto g4 = extreme_swap(kept, kept_lb, excl_lb, n, false);
    const CaseLabel c4 = ctx.classify(g4);
    if (ctx.classify(g3) == CaseLabel::Case2 && c4 == CaseLabel::Case2) {
      auto g6 = extreme_swap(kept, kept_pay, excl_pay, n, true);
      best.offer(ctx.allocate_waterfill(g6), g6);
      break;
    }
    if (c4 == CaseLabel::Case3) break;

    for_each_combination(kept_sorted, n, [&](std::span<const std::size_t> out) {
      for_each_combination(excluded, n, [&](std::span<const std::size_t> in) {
        auto candidate = swapped(kept_sorted, out, in);
        auto result = ctx.evaluate(candidate);
        best.offer(std::move(result), std::move(candidate));
      });
    });
  }

  ExchangeOutcome outcome;
  outcome.best_set = best.set();
  outcome.allocation = best.take(ctx.size());
  return outcome;
}

AllocationResult select_and_allocate(const AllocationContext& ctx) {
  const std::size_t population = ctx.size();
  std::vector<std::size_t> current = ctx.reduce();
  const auto floor_users = current.empty() ? std::nullopt : ctx.min_users();
  if (!floor_users || static_cast<int>(current.size()) < *floor_users) {
    return AllocationResult::infeasible(population, CaseLabel::Case3);
  }
  const std::size_t l_lb = static_cast<std::size_t>(*floor_users);

  const CaseLabel first = ctx.classify(current);
  if (first == CaseLabel::Case1) return ctx.allocate_upper(current);
  if (current.size() == l_lb) return ctx.evaluate(current);

  Incumbent best;
  std::vector<std::size_t> excluded;
  while (current.size() > l_lb) {
    const int l = static_cast<int>(current.size());
    if (ctx.classify(current) == CaseLabel::Case2) {
      best.offer(ctx.allocate_waterfill(current), current);
    }

    auto weakest = current.begin();
    double weakest_pay = ctx.payment(*weakest, l);
    for (auto it = std::next(current.begin()); it != current.end(); ++it) {
      const double pay = ctx.payment(*it, l);
      if (pay < weakest_pay ||
          (pay == weakest_pay && ctx.user(*it).id < ctx.user(*weakest).id)) {
        weakest = it;
        weakest_pay = pay;
      }
    }
    excluded.push_back(*weakest);
    current.erase(weakest);

    if (ctx.classify(current) == CaseLabel::Case1) {
      ExchangeOutcome ex = exchange_search(ctx, current, excluded);
      const bool ex_case1 = ex.allocation.feasible && ex.allocation.case_label == CaseLabel::Case1;
      if (ex_case1 || !ex.allocation.feasible) {
        best.offer(std::move(ex.allocation), ex.best_set);
        return best.take(population);
      }
      std::set<std::size_t> pool(current.begin(), current.end());
      pool.insert(excluded.begin(), excluded.end());
      current = ex.best_set;
      excluded.clear();
      for (std::size_t i : pool) {
        if (!std::binary_search(current.begin(), current.end(), i)) excluded.push_back(i);
      }
    }

    if (current.size() == l_lb) {
      best.offer(ctx.evaluate(current), current);
      return best.take(population);
    }
  }
  return best.take(population);
}

namespace {

struct PopulationTables {
  std::vector<SecondaryUser> users;
  std::vector<LinkRates> rates;
  FusionProfile profile;
};

PopulationTables tabulate(std::vector<SecondaryUser> users, const SensingDesign& design,
                          const SensingGeometry& geom, const SystemParams& params) {
  PopulationTables t{std::move(users), {}, FusionProfile::compute(design, geom, 0)};
  t.rates.reserve(t.users.size());
  for (const auto& su : t.users) t.rates.push_back(link_rates(su, params));
  t.profile = FusionProfile::compute(design, geom, static_cast<int>(t.users.size()));
  return t;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void require_profitable(std::span<const SecondaryUser> set, const char* op) {
  for (const auto& su : set) {
    if (!su.profitable()) {
      throw PreconditionViolation(std::string(op) + ": SU " + std::to_string(su.id) +
                                  " can never profit; reduce the set first");
    }
  }
}

void require_threshold(std::span<const SecondaryUser> set, const SensingDesign& design,
                       const char* op) {
  if (set.empty()) throw PreconditionViolation(std::string(op) + ": empty SU set");
  if (static_cast<std::size_t>(design.k()) > set.size()) {
    throw ConstraintViolation(std::string(op) + ": k exceeds the number of SUs");
  }
}

}  // namespace

CaseLabel classify_case(std::span<const SecondaryUser> set, const SensingDesign& design,
                        const SensingGeometry& geom, const SystemParams& params) {
  require_threshold(set, design, "classify_case");
  require_profitable(set, "classify_case");
  const auto t = tabulate({set.begin(), set.end()}, design, geom, params);
  const AllocationContext ctx(t.users, t.rates, t.profile, params);
  return ctx.classify(all_indices(set.size()));
}

std::vector<SecondaryUser> reduce_feasible_set(std::span<const SecondaryUser> all_sus,
                                               const SensingDesign& design,
                                               const SensingGeometry& geom,
                                               const SystemParams& params) {
  const auto t = tabulate({all_sus.begin(), all_sus.end()}, design, geom, params);
  const AllocationContext ctx(t.users, t.rates, t.profile, params);
  std::vector<SecondaryUser> kept;
  for (std::size_t i : ctx.reduce()) kept.push_back(all_sus[i]);
  return kept;
}

AllocationResult waterfill_allocate(std::span<const SecondaryUser> set,
                                    const SensingDesign& design,
                                    const SensingGeometry& geom,
                                    const SystemParams& params) {
  require_threshold(set, design, "waterfill_allocate");
  require_profitable(set, "waterfill_allocate");
  const auto t = tabulate({set.begin(), set.end()}, design, geom, params);
  const AllocationContext ctx(t.users, t.rates, t.profile, params);
  const auto idx = all_indices(set.size());
  const CaseLabel label = ctx.classify(idx);
  if (label != CaseLabel::Case2) {
    throw PreconditionViolation(std::string("waterfill_allocate: set is ") +
                                std::string(to_string(label)) + ", not case2");
  }
  return ctx.allocate_waterfill(idx);
}

ExchangeResult exchange_search(std::span<const SecondaryUser> kept,
                               std::span<const SecondaryUser> excluded,
                               const SensingDesign& design, const SensingGeometry& geom,
                               const SystemParams& params) {
  require_threshold(kept, design, "exchange_search");
  std::set<std::uint32_t> ids;
  for (const auto& su : kept) ids.insert(su.id);
  for (const auto& su : excluded) {
    if (!ids.insert(su.id).second) {
      throw PreconditionViolation("exchange_search: kept and excluded overlap");
    }
  }
  std::vector<SecondaryUser> population(kept.begin(), kept.end());
  population.insert(population.end(), excluded.begin(), excluded.end());
  require_profitable(population, "exchange_search");
  const auto t = tabulate(std::move(population), design, geom, params);
  const AllocationContext ctx(t.users, t.rates, t.profile, params);

  std::vector<std::size_t> kept_idx(kept.size());
  std::iota(kept_idx.begin(), kept_idx.end(), std::size_t{0});
  std::vector<std::size_t> excl_idx(excluded.size());
  std::iota(excl_idx.begin(), excl_idx.end(), kept.size());

  ExchangeOutcome ex = exchange_search(ctx, kept_idx, excl_idx);
  ExchangeResult out;
  for (std::size_t i : ex.best_set) out.best_set.push_back(t.users[i]);
  out.allocation = std::move(ex.allocation);
  return out;
}

AllocationResult select_and_allocate(std::span<const SecondaryUser> all_sus,
                                     const SensingDesign& design,
                                     const SensingGeometry& geom,
                                     const SystemParams& params) {
  const auto t = tabulate({all_sus.begin(), all_sus.end()}, design, geom, params);
  const AllocationContext ctx(t.users, t.rates, t.profile, params);
  return select_and_allocate(ctx);
}

}  // namespace cogalloc
