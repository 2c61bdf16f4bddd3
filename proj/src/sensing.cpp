#include "cogalloc/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cogalloc/error.hpp"
#include "cogalloc/units.hpp"

namespace cogalloc {

namespace {

bool open_unit(double p) { return p > 0.0 && p < 1.0; }

// Acklam's rational approximation for the lower-tail normal quantile.
// Relative error ~1e-9; Newton on Q finishes the job.
double acklam_lower_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double log_binomial_coefficient(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double p) {
  if (!open_unit(p)) {
    throw DomainError("q_inverse: probability must lie in (0, 1), got " +
                      std::to_string(p));
  }
  // Work on the smaller tail so Q(x) keeps full relative precision.
  if (p > 0.5) return -q_inverse(1.0 - p);
  if (p == 0.5) return 0.0;

  double x = -acklam_lower_quantile(p);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int iter = 0; iter < 50; ++iter) {
    const double density = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (density == 0.0) break;
    const double step = (q_function(x) - p) / density;
    x += step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(x))) return x;
  }
  if (std::abs(q_function(x) - p) > 1e-10 * p) {
    throw NumericError("q_inverse: Newton iteration did not converge for p=" +
                       std::to_string(p));
  }
  return x;
}

SensingGeometry::SensingGeometry(double gamma_linear, int n_samples, double noise_var)
    : gamma_(gamma_linear), n_samples_(n_samples), noise_var_(noise_var) {
  if (!(gamma_linear > 0.0) || !std::isfinite(gamma_linear)) {
    throw DomainError("SensingGeometry: gamma must be positive");
  }
  if (n_samples < 1) throw DomainError("SensingGeometry: n_samples must be >= 1");
  if (!(noise_var > 0.0)) throw DomainError("SensingGeometry: noise_var must be positive");
}

SensingGeometry SensingGeometry::from_db(double gamma_db, int n_samples, double noise_var) {
  return SensingGeometry(db_to_linear(gamma_db), n_samples, noise_var);
}

SensingDesign::SensingDesign(double pfa_local, int k_threshold)
    : pfa_(pfa_local), k_(k_threshold) {
  if (!open_unit(pfa_local)) {
    throw DomainError("SensingDesign: pfa must lie in (0, 1), got " +
                      std::to_string(pfa_local));
  }
  if (k_threshold < 1) throw DomainError("SensingDesign: k must be >= 1");
}

double threshold_from_pfa(double pfa, const SensingGeometry& geom) {
  const double root_n = std::sqrt(static_cast<double>(geom.n_samples()));
  return geom.noise_var() * (1.0 + q_inverse(pfa) / root_n);
}

double pfa_from_threshold(double threshold, const SensingGeometry& geom) {
  const double root_n = std::sqrt(static_cast<double>(geom.n_samples()));
  return q_function((threshold / geom.noise_var() - 1.0) * root_n);
}

double local_pd(double pfa, const SensingGeometry& geom) {
  const double g = geom.gamma();
  const double root_n = std::sqrt(static_cast<double>(geom.n_samples()));
  return q_function((q_inverse(pfa) - root_n * g) / std::sqrt(2.0 * g + 1.0));
}

double binomial_upper_tail(double p, int k, int n) {
  if (n < 0) throw DomainError("binomial_upper_tail: n must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("binomial_upper_tail: p must lie in [0, 1]");
  }
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  // Terms are unimodal in l; adding the two tails inward from the ends keeps
  // the small ones from being swallowed by the large.
  double low_sum = 0.0;
  double high_sum = 0.0;
  int lo = k;
  int hi = n;
  auto term = [&](int l) {
    return std::exp(log_binomial_coefficient(n, l) + l * log_p + (n - l) * log_q);
  };
  while (lo <= hi) {
    const double t_lo = term(lo);
    if (lo == hi) {
      low_sum += t_lo;
      break;
    }
    const double t_hi = term(hi);
    if (t_lo <= t_hi) {
      low_sum += t_lo;
      ++lo;
    } else {
      high_sum += t_hi;
      --hi;
    }
  }
  return std::min(1.0, low_sum + high_sum);
}

namespace {

void require_threshold_fits(const SensingDesign& design, int l_active) {
  if (design.k() > l_active) {
    throw ConstraintViolation("FC threshold k=" + std::to_string(design.k()) +
                              " exceeds the number of reporting users L=" +
                              std::to_string(l_active));
  }
}

}  // namespace

double global_pfa(const SensingDesign& design, int l_active) {
  require_threshold_fits(design, l_active);
  return binomial_upper_tail(design.pfa(), design.k(), l_active);
}

double global_pd(const SensingDesign& design, const SensingGeometry& geom, int l_active) {
  require_threshold_fits(design, l_active);
  return binomial_upper_tail(local_pd(design.pfa(), geom), design.k(), l_active);
}

std::optional<int> min_active_users(const SensingDesign& design,
                                    const SensingGeometry& geom, double zeta,
                                    int m_total) {
  if (!open_unit(zeta)) throw DomainError("min_active_users: zeta must lie in (0, 1)");
  const double pd = local_pd(design.pfa(), geom);
  for (int l = design.k(); l <= m_total; ++l) {
    if (binomial_upper_tail(pd, design.k(), l) >= zeta) return l;
  }
  return std::nullopt;
}

std::vector<std::vector<double>> binomial_tail_table(double p, int n) {
  if (n < 0) throw DomainError("binomial_tail_table: n must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_tail_table: p must lie in [0, 1]");
  const double q = 1.0 - p;
  std::vector<std::vector<double>> tails(static_cast<std::size_t>(n) + 1);
  std::vector<double> pmf{1.0};
  for (int l = 0; l <= n; ++l) {
    if (l > 0) {
      std::vector<double> next(static_cast<std::size_t>(l) + 1, 0.0);
      for (int j = 0; j < l; ++j) {
        next[j] += q * pmf[j];
        next[j + 1] += p * pmf[j];
      }
      pmf = std::move(next);
    }
    auto& row = tails[l];
    row.assign(static_cast<std::size_t>(l) + 1, 0.0);
    double acc = 0.0;
    for (int j = l; j >= 1; --j) {
      acc += pmf[j];
      row[j] = std::min(acc, 1.0);
    }
    row[0] = 1.0;
  }
  return tails;
}

FusionProfile FusionProfile::compute(const SensingDesign& design,
                                     const SensingGeometry& geom, int max_users) {
  if (max_users < 0) throw DomainError("FusionProfile: max_users must be non-negative");
  FusionProfile profile{design, local_pd(design.pfa(), geom), {}, {}};
  profile.false_alarm.assign(static_cast<std::size_t>(max_users) + 1, 0.0);
  profile.detection.assign(static_cast<std::size_t>(max_users) + 1, 0.0);
  for (int l = design.k(); l <= max_users; ++l) {
    profile.false_alarm[l] = binomial_upper_tail(design.pfa(), design.k(), l);
    profile.detection[l] = binomial_upper_tail(profile.local_detection, design.k(), l);
  }
  return profile;
}

FusionProfile FusionProfile::from_tails(const SensingDesign& design, double local_detection,
                                        const std::vector<std::vector<double>>& false_alarm_tails,
                                        const std::vector<std::vector<double>>& detection_tails) {
  if (false_alarm_tails.empty() || false_alarm_tails.size() != detection_tails.size()) {
    throw DomainError("FusionProfile: tail tables are empty or differ in size");
  }
  const std::size_t rows = false_alarm_tails.size();
  FusionProfile profile{design, local_detection, std::vector<double>(rows, 0.0),
                        std::vector<double>(rows, 0.0)};
  const auto k = static_cast<std::size_t>(design.k());
  for (std::size_t l = k; l < rows; ++l) {
    profile.false_alarm[l] = false_alarm_tails[l][k];
    profile.detection[l] = detection_tails[l][k];
  }
  return profile;
}

std::optional<int> FusionProfile::min_active(double zeta, int m_total) const {
  const int limit = std::min(m_total, max_users());
  for (int l = design.k(); l <= limit; ++l) {
    if (detection[l] >= zeta) return l;
  }
  return std::nullopt;
}

}  // namespace cogalloc
