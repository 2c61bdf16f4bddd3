#pragma once

#include <optional>
#include <vector>

namespace cogalloc {

/// Standard Gaussian upper-tail probability Q(x).
double q_function(double x);

/// Inverse of q_function on (0, 1). Throws DomainError outside that range.
double q_inverse(double p);

/// Sensing SNR, sample count and noise variance shared by every SU.
class SensingGeometry {
 public:
  SensingGeometry(double gamma_linear, int n_samples, double noise_var = 1.0);

  static SensingGeometry from_db(double gamma_db, int n_samples,
                                 double noise_var = 1.0);

  double gamma() const { return gamma_; }
  int n_samples() const { return n_samples_; }
  double noise_var() const { return noise_var_; }

 private:
  double gamma_;
  int n_samples_;
  double noise_var_;
};

/// Local false-alarm probability plus the FC's k-out-of-L vote threshold.
class SensingDesign {
 public:
  SensingDesign(double pfa_local, int k_threshold);

  double pfa() const { return pfa_; }
  int k() const { return k_; }

  friend bool operator==(const SensingDesign&, const SensingDesign&) = default;

 private:
  double pfa_;
  int k_;
};

// Energy-detector threshold achieving a local false-alarm probability, and
// the forward map back to the probability.
double threshold_from_pfa(double pfa, const SensingGeometry& geom);
double pfa_from_threshold(double threshold, const SensingGeometry& geom);

/// Local detection probability of the energy detector at a given P_fa.
double local_pd(double pfa, const SensingGeometry& geom);

/// P[X >= k] for X ~ Binomial(n, p). Evaluated in log space and summed from
/// the smallest term. k <= 0 gives 1, k > n gives 0.
double binomial_upper_tail(double p, int k, int n);

/// Fused false-alarm probability for l_active reporting users.
/// Throws ConstraintViolation when k > l_active.
double global_pfa(const SensingDesign& design, int l_active);

/// Fused detection probability for l_active reporting users.
double global_pd(const SensingDesign& design, const SensingGeometry& geom,
                 int l_active);

/// Smallest L in [k, m_total] with global_pd >= zeta, or nullopt when the
/// detection floor cannot be met with at most m_total users.
std::optional<int> min_active_users(const SensingDesign& design,
                                    const SensingGeometry& geom, double zeta,
                                    int m_total);

/// tails[L][k] = P(Binomial(L, p) >= k) for 0 <= k <= L <= n, built by the
/// pmf recurrence in O(n^2). Agrees with binomial_upper_tail to a few ulps
/// per trial.
std::vector<std::vector<double>> binomial_tail_table(double p, int n);

/// Fused probabilities of one design tabulated for L = 0..max_users.
/// Entries with L < k are zero: the FC can never collect k votes there.
struct FusionProfile {
  SensingDesign design;
  double local_detection = 0.0;
  std::vector<double> false_alarm;  // indexed by L
  std::vector<double> detection;    // indexed by L

  static FusionProfile compute(const SensingDesign& design,
                               const SensingGeometry& geom, int max_users);

  /// Same table read from precomputed tails of the local false-alarm and
  /// detection probabilities (see binomial_tail_table).
  static FusionProfile from_tails(const SensingDesign& design, double local_detection,
                                  const std::vector<std::vector<double>>& false_alarm_tails,
                                  const std::vector<std::vector<double>>& detection_tails);

  int max_users() const { return static_cast<int>(false_alarm.size()) - 1; }

  // Same contract as min_active_users, read from the table.
  std::optional<int> min_active(double zeta, int m_total) const;
};

}  // namespace cogalloc
