#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cogalloc/allocator.hpp"
#include "cogalloc/economics.hpp"
#include "cogalloc/sensing.hpp"

namespace cogalloc {

/// Candidate local false-alarm probabilities and FC thresholds.
class DesignGrid {
 public:
  /// pfa values must lie in (0, 1); they are sorted and must be distinct.
  explicit DesignGrid(std::vector<double> pfa_values, std::optional<int> k_max = std::nullopt);

  /// {i / divisions} for i = 1 .. divisions - 1.
  static DesignGrid uniform(int divisions = 10, std::optional<int> k_max = std::nullopt);

  const std::vector<double>& pfa_values() const { return pfa_; }
  std::optional<int> k_max() const { return k_max_; }

  /// Thresholds 1 .. min(k_max, m_total).
  int k_limit(int m_total) const;

 private:
  std::vector<double> pfa_;
  std::optional<int> k_max_;
};

struct GridPoint {
  double pfa = 0.0;
  int k = 0;
  bool feasible = false;
  double fc_utility = 0.0;
};

struct OptimizationOutcome {
  bool feasible = false;
  std::optional<SensingDesign> best_design;
  AllocationResult best_allocation;
  std::vector<GridPoint> utility_surface;  // (pfa asc, k asc)
  double wall_time = 0.0;
};

/// Grid search over (pfa, k) running select_and_allocate at every point.
/// Ties resolve to the smaller pfa, then the smaller k.
OptimizationOutcome joint_optimize(std::span<const SecondaryUser> all_sus,
                                   const SensingGeometry& geom, const SystemParams& params,
                                   const DesignGrid& grid);

/// Brute force over every subset, threshold and grid pfa. Refuses more than
/// `cap` profitable SUs with CapacityError.
OptimizationOutcome exhaustive_oracle(std::span<const SecondaryUser> all_sus,
                                      const SensingGeometry& geom,
                                      const SystemParams& params, const DesignGrid& grid,
                                      std::size_t cap = 12);

struct NonJointOutcome {
  OptimizationOutcome outcome;
  std::vector<double> su_utilities;  // aligned with the input; may be negative
};

/// Two stages: pick the design minimising fused false alarm subject to the
/// detection floor with every buffer-feasible SU reporting, then fill time
/// ignoring the break-even bound.
NonJointOutcome nonjoint_baseline(std::span<const SecondaryUser> all_sus,
                                  const SensingGeometry& geom, const SystemParams& params,
                                  const DesignGrid& grid);

int count_negative_utility(std::span<const double> su_utilities);
int count_negative_utility(const NonJointOutcome& report);
int count_negative_utility(const AllocationResult& allocation);

}  // namespace cogalloc
