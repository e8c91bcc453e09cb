#include "pipkit/relations.hpp"

#include "pipkit/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pipkit {

namespace {

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error(std::string(what) + " must lie in (0, 1)");
}

void require_pip_upper_half(double pip, const char* what) {
  if (!(pip >= 0.5 && pip < 1.0)) throw std::domain_error(std::string(what) + ": pip must lie in [0.5, 1)");
}

void require_n(int n, int min_n, const char* what) {
  if (n < min_n) throw std::domain_error(std::string(what) + ": n must be >= " + std::to_string(min_n));
}

}  // namespace

TwoSampleTestResult pvalue_two_sample(const Dataset& data, std::string_view group) {
  if (!is_binary_column(data, group)) {
    throw std::invalid_argument("pvalue_two_sample: column '" + std::string(group) + "' is not 0/1");
  }
  const std::size_t col = data.column_index(group);
  TwoSampleTestResult out;
  double sum0 = 0.0, sum1 = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.value(i, col) == 0.0) {
      ++out.n0;
      sum0 += data.outcome(i);
    } else {
      ++out.n1;
      sum1 += data.outcome(i);
    }
  }
  if (out.n0 == 0 || out.n1 == 0) throw std::invalid_argument("pvalue_two_sample: both groups must be non-empty");
  const std::size_t n = data.n();
  if (n < 3) throw std::invalid_argument("pvalue_two_sample: need n >= 3");
  const double mean0 = sum0 / static_cast<double>(out.n0);
  const double mean1 = sum1 / static_cast<double>(out.n1);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = data.outcome(i) - (data.value(i, col) == 0.0 ? mean0 : mean1);
    ss += d * d;
  }
  out.df = static_cast<int>(n - 2);
  const double sigma = std::sqrt(ss / out.df);
  out.beta1_hat = mean1 - mean0;
  out.se_beta1 = sigma * std::sqrt(1.0 / static_cast<double>(out.n0) + 1.0 / static_cast<double>(out.n1));
  if (out.beta1_hat == 0.0) {
    out.t_statistic = 0.0;
    out.p_value = 1.0;
  } else if (out.se_beta1 == 0.0) {
    out.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), out.beta1_hat);
    out.p_value = 0.0;
  } else {
    out.t_statistic = out.beta1_hat / out.se_beta1;
    out.p_value = std::min(1.0, 2.0 * student_t_sf(std::abs(out.t_statistic), out.df));
  }
  return out;
}

double pip_from_pvalue(double p, int n) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("pip_from_pvalue: p must lie in (0, 1]");
  require_n(n, 3, "pip_from_pvalue");
  if (p == 1.0) return 0.5;
  const double t = student_t_upper_quantile(0.5 * p, n - 2);
  return std_normal_cdf(t / (2.0 * std::sqrt(static_cast<double>(n))));
}

double pvalue_from_pip(double pip, int n) {
  require_pip_upper_half(pip, "pvalue_from_pip");
  require_n(n, 3, "pvalue_from_pip");
  if (pip == 0.5) return 1.0;
  const double t = 2.0 * std::sqrt(static_cast<double>(n)) * std_normal_quantile(pip);
  return std::min(1.0, 2.0 * student_t_sf(t, n - 2));
}

double asymptotic_scaled_log_p(double pip) {
  require_open_unit(pip, "asymptotic_scaled_log_p: pip");
  const double z = std_normal_quantile(pip);
  return -0.5 * std::log1p(4.0 * z * z);
}

double delta_mse_from_pip(double pip, double sigma) {
  require_open_unit(pip, "delta_mse_from_pip: pip");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::domain_error("delta_mse_from_pip: sigma must be positive");
  const double z = std_normal_quantile(pip);
  return -4.0 * sigma * sigma * z * z;
}

double overlap_from_pip(double pip, int n) {
  require_pip_upper_half(pip, "overlap_from_pip");
  require_n(n, 1, "overlap_from_pip");
  if (pip == 0.5) return 1.0;
  const double z = std_normal_quantile(pip);
  return 2.0 * std_normal_cdf(-2.0 * z / std::sqrt(1.0 + 2.0 / static_cast<double>(n)));
}

double two_proportion_z(long x1, long n1, long x2, long n2) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("two_proportion_z: group sizes must be >= 1");
  if (x1 < 0 || x1 > n1 || x2 < 0 || x2 > n2) {
    throw std::domain_error("two_proportion_z: counts must satisfy 0 <= x <= n");
  }
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double pooled = static_cast<double>(x1 + x2) / (a + b);
  if (pooled <= 0.0 || pooled >= 1.0) return 0.0;
  const double diff = static_cast<double>(x1) / a - static_cast<double>(x2) / b;
  return diff / std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
}

double pvalue_two_proportion(long x1, long n1, long x2, long n2) {
  const double z = two_proportion_z(x1, n1, x2, n2);
  if (z == 0.0) return 1.0;
  return std::min(1.0, 2.0 * std_normal_sf(std::abs(z)));
}

}  // namespace pipkit
