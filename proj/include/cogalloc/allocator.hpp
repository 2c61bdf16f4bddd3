#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cogalloc/economics.hpp"
#include "cogalloc/sensing.hpp"

namespace cogalloc {

enum class CaseLabel { Case1, Case2, Case3 };

std::string_view to_string(CaseLabel label);

// Absolute slack on every time comparison.
inline constexpr double kTimeSlack = 1e-12;

/// True when a beats b by more than a relative 1e-12. Near-ties keep the
/// earlier candidate, which makes every argmax in the project deterministic.
bool strictly_better(double a, double b);

/// Per-SU vectors are aligned with the population the result was computed
/// for; inactive entries hold zeros.
struct AllocationResult {
  std::vector<bool> active;
  std::vector<double> times;
  std::vector<double> rates;
  double fc_utility = 0.0;
  std::vector<double> su_utilities;
  CaseLabel case_label = CaseLabel::Case3;
  bool feasible = false;

  static AllocationResult infeasible(std::size_t population, CaseLabel label);

  int n_active() const;
  std::vector<std::size_t> selected() const;
};

/// Bounds and payments of a fixed population under one sensing design.
/// Holds references: the users, rates and profile must outlive it.
class AllocationContext {
 public:
  AllocationContext(std::span<const SecondaryUser> users,
                    std::span<const LinkRates> rates, const FusionProfile& profile,
                    const SystemParams& params);

  std::size_t size() const { return users_.size(); }
  const SecondaryUser& user(std::size_t i) const { return users_[i]; }
  const SensingDesign& design() const { return profile_.design; }
  const SystemParams& params() const { return params_; }

  double rate(std::size_t i, int l) const;
  double lower(std::size_t i, int l) const;
  double upper(std::size_t i, int l) const;
  double payment(std::size_t i, int l) const { return rate(i, l) * users_[i].pay_rate; }
  double budget(int l) const { return effective_time(params_, l); }

  /// Minimum number of reporting users meeting the detection floor.
  std::optional<int> min_users() const;

  /// Indices whose bounds are well ordered at the full population size.
  std::vector<std::size_t> reduce() const;

  CaseLabel classify(std::span<const std::size_t> set) const;

  AllocationResult allocate_upper(std::span<const std::size_t> set) const;
  AllocationResult allocate_waterfill(std::span<const std::size_t> set) const;

  /// Case-1 at upper bounds, Case-2 by water-filling, Case-3 infeasible.
  AllocationResult evaluate(std::span<const std::size_t> set) const;

 private:
  AllocationResult finish(std::span<const std::size_t> set, std::vector<double> times,
                          CaseLabel label) const;

  std::span<const SecondaryUser> users_;
  std::span<const LinkRates> rates_;
  const FusionProfile& profile_;
  const SystemParams& params_;
  double idle_weight_ = 0.0;
};

/// Greedy fill: every member starts at its lower bound, then leftover budget
/// goes to the highest payment first (ties to the lower id). Vectors are
/// indexed by member position.
std::vector<double> waterfill_times(std::span<const double> lower,
                                    std::span<const double> upper,
                                    std::span<const double> payment,
                                    std::span<const std::uint32_t> ids, double budget);

struct ExchangeOutcome {
  std::vector<std::size_t> best_set;  // indices into the context population
  AllocationResult allocation;
};

AllocationResult select_and_allocate(const AllocationContext& ctx);
ExchangeOutcome exchange_search(const AllocationContext& ctx,
                                std::span<const std::size_t> kept,
                                std::span<const std::size_t> excluded);

// Convenience overloads over plain SU lists.

CaseLabel classify_case(std::span<const SecondaryUser> set, const SensingDesign& design,
                        const SensingGeometry& geom, const SystemParams& params);

std::vector<SecondaryUser> reduce_feasible_set(std::span<const SecondaryUser> all_sus,
                                               const SensingDesign& design,
                                               const SensingGeometry& geom,
                                               const SystemParams& params);

AllocationResult waterfill_allocate(std::span<const SecondaryUser> set,
                                    const SensingDesign& design,
                                    const SensingGeometry& geom,
                                    const SystemParams& params);

/// Results are aligned with kept followed by excluded.
struct ExchangeResult {
  std::vector<SecondaryUser> best_set;
  AllocationResult allocation;
};

ExchangeResult exchange_search(std::span<const SecondaryUser> kept,
                               std::span<const SecondaryUser> excluded,
                               const SensingDesign& design, const SensingGeometry& geom,
                               const SystemParams& params);

AllocationResult select_and_allocate(std::span<const SecondaryUser> all_sus,
                                     const SensingDesign& design,
                                     const SensingGeometry& geom,
                                     const SystemParams& params);

}  // namespace cogalloc
