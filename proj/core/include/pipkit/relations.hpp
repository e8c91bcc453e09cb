#ifndef PIPKIT_RELATIONS_HPP
#define PIPKIT_RELATIONS_HPP

#include "pipkit/core.hpp"

#include <string_view>

namespace pipkit {

// Mappings among PIP, p-values, difference in MSE and predictive overlap for
// the two-sample normal model. All functions are pure; domain violations
// throw std::domain_error.

struct TwoSampleTestResult {
  double t_statistic = 0.0;
  int df = 0;
  double p_value = 1.0;  ///< 2 * P(T_df > |t|)
  double beta1_hat = 0.0;
  double se_beta1 = 0.0;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

/// Pooled-variance two-sided t-test of the 0/1 column `group`, df = n - 2.
/// With n/2 rows per group, t = sqrt(n) * beta1_hat / (2 sigma_hat).
/// Throws std::invalid_argument for a non-binary column or an empty group.
TwoSampleTestResult pvalue_two_sample(const Dataset& data, std::string_view group = "x");

/// Phi(t_{n-2}^{-1}(1 - p/2) / (2 sqrt n)); requires 0 < p <= 1, n >= 3.
double pip_from_pvalue(double p, int n);

/// 2 * P(T_{n-2} > 2 sqrt(n) Phi^{-1}(pip)); inverse of pip_from_pvalue on
/// 0.5 <= pip < 1.
double pvalue_from_pip(double pip, int n);

/// Large-n limit of log(p) / n: -0.5 * log(1 + 4 Phi^{-1}(pip)^2), 0 < pip < 1.
double asymptotic_scaled_log_p(double pip);

/// -4 sigma^2 Phi^{-1}(pip)^2.
double delta_mse_from_pip(double pip, double sigma);

/// Overlap of the two group predictive densities:
/// 2 Phi(-2 Phi^{-1}(pip) / sqrt(1 + 2/n)), 0.5 <= pip < 1.
double overlap_from_pip(double pip, int n);

/// Pooled two-proportion z statistic without continuity correction; 0 when
/// the pooled proportion is 0 or 1.
double two_proportion_z(long x1, long n1, long x2, long n2);

/// Two-sided p-value of two_proportion_z; 1 when the pooled proportion is 0 or 1.
double pvalue_two_proportion(long x1, long n1, long x2, long n2);

}  // namespace pipkit

#endif  // PIPKIT_RELATIONS_HPP
