#pragma once

#include <span>
#include <vector>

namespace cogalloc {

/// Inputs of the two-variable FC utility U(pfa, k) used to test
/// quasiconcavity. airtime holds a_i * t_i per SU.
struct ProbeParams {
  int m_users = 5;
  double k = 5.0;
  double p_h0 = 0.6;
  double gamma_db = -7.5;
  int n_samples = 40;
  std::vector<double> r0{7.4, 8.0, 8.2, 0.2, 9.5};
  std::vector<double> r1{2.3, 3.5, 2.7, 0.02, 3.3};
  std::vector<double> airtime{0.1, 0.1, 0.1, 0.1, 0.1};
  double pfa_step = 1e-4;
  double k_step = 1e-3;

  static ProbeParams reference_example() { return {}; }
  void validate() const;
};

struct ProbeRow {
  double pfa = 0.0;
  double det_h = 0.0;
  double det_ha = 0.0;
  double du_dpfa = 0.0;
  double du_dk = 0.0;
};

/// Binomial term C(m, x) p^x (1-p)^(m-x) with the gamma-function coefficient,
/// defined for real x in (-1, m + 1).
double binomial_density(double p, double x, int m);

/// P[X >= k] extended to real k within a quarter of an integer n by
/// subtracting the integral of binomial_density over [n, k]. Agrees with the
/// discrete tail at integers and its k-derivative is -binomial_density.
/// No single extension can do both across a whole unit interval, so k
/// further than 0.25 from an integer, or outside [0, m], is a DomainError.
double continuous_upper_tail(double p, double k, int m);

double probe_utility(const ProbeParams& params, double pfa, double k);

std::vector<double> default_probe_grid();

/// Bordered-Hessian determinants by central differences at each grid pfa.
std::vector<ProbeRow> quasiconcavity_probe(const ProbeParams& params,
                                           std::span<const double> pfa_grid);

}  // namespace cogalloc
