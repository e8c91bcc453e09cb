#include "pipkit/dists.hpp"

#include "pipkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pipkit {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <std::size_t N>
double horner(const double (&c)[N], double x) {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// AS241 PPND16 coefficients, lowest order first.
constexpr double kA[] = {3.387132872796366608,   133.14166789178437745, 1971.5909503065514427,
                         13731.693765509461125,  45921.953931549871457, 67265.770927008700853,
                         33430.575583588128105,  2509.0809287301226727};
constexpr double kB[] = {1.0,                    42.313330701600911252, 687.1870074920579083,
                         5394.1960214247511077,  21213.794301586595867, 39307.89580009271061,
                         28729.085735721942674,  5226.495278852545925};
constexpr double kC[] = {1.42343711074968357734,  4.6303378461565452959,   5.7694972214606914055,
                         3.64784832476320460504,  1.27045825245236838258,  0.24178072517745061177,
                         0.0227238449892691845833, 7.7454501427834140764e-4};
constexpr double kD[] = {1.0,                     2.05319162663775882187,  1.6763848301838038494,
                         0.68976733498510000455,  0.14810397642748007459,  0.0151986665636164571966,
                         5.475938084995344946e-4, 1.05075007164441684324e-9};
constexpr double kE[] = {6.6579046435011037772,   5.4637849111641143699,   1.7848265399172913358,
                         0.29656057182850489123,  0.026532189526576123093, 1.2426609473880784386e-3,
                         2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[] = {1.0,                     0.59983220655588793769,  0.13692988092273580531,
                         0.0148753612908506148525, 7.868691311456132591e-4, 1.8463183175100546818e-5,
                         1.4215117583164458887e-7, 2.04426310338993978564e-15};

double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(kA, r) / horner(kB, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val = 0.0;
  if (r <= 5.0) {
    r -= 1.6;
    val = horner(kC, r) / horner(kD, r);
  } else {
    r -= 5.0;
    val = horner(kE, r) / horner(kF, r);
  }
  return q < 0.0 ? -val : val;
}

// Continued fraction for I_x(a,b) (Numerical Recipes betacf form).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

// I_x(a,b) with y = 1 - x supplied separately so neither tail loses digits.
double ibeta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// Upper tail area of t(df) for t >= 0.
double t_upper_tail(double t, double df) {
  const double t2 = t * t;
  const double denom = df + t2;
  return 0.5 * ibeta(0.5 * df, 0.5, df / denom, t2 / denom);
}

void check_df(int df) {
  if (df < 1) throw std::domain_error("Student-t: degrees of freedom must be >= 1");
}

}  // namespace

double std_normal_cdf(double z) {
  if (std::isnan(z)) throw std::domain_error("std_normal_cdf: NaN argument");
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double std_normal_sf(double z) {
  if (std::isnan(z)) throw std::domain_error("std_normal_sf: NaN argument");
  return 0.5 * std::erfc(z * kInvSqrt2);
}

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p must lie in (0,1)");
  if (p == 0.5) return 0.0;
  double x = ppnd16(p);
  // Newton polish; residual formed in the tail that keeps relative precision.
  const double pdf = std_normal_pdf(x);
  if (pdf > 0.0) {
    const double resid = p < 0.5 ? std_normal_cdf(x) - p : (1.0 - p) - std_normal_sf(x);
    x -= resid / pdf;
  }
  return x;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete beta: a, b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete beta: x outside [0,1]");
  return ibeta(a, b, x, 1.0 - x);
}

double student_t_pdf(double t, double df) {
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::numbers::pi);
  return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

double student_t_sf(double t, int df) {
  check_df(df);
  if (std::isnan(t)) throw std::domain_error("student_t_sf: NaN argument");
  if (t == 0.0) return 0.5;
  const double tail = t_upper_tail(std::abs(t), df);
  return t > 0.0 ? tail : 1.0 - tail;
}

double student_t_cdf(double t, int df) {
  check_df(df);
  if (std::isnan(t)) throw std::domain_error("student_t_cdf: NaN argument");
  if (t == 0.0) return 0.5;
  const double tail = t_upper_tail(std::abs(t), df);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_upper_quantile(double q, int df) {
  check_df(df);
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("student_t quantile: tail area must lie in (0,1)");
  if (q == 0.5) return 0.0;
  if (q > 0.5) return -student_t_upper_quantile(1.0 - q, df);

  const double nu = df;
  // Bracket [lo, hi] with sf(lo) >= q > sf(hi).
  double lo = 0.0;
  double hi = std::max(1.0, -std::log(q));
  int guard = 0;
  while (t_upper_tail(hi, nu) > q) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 1100 || !std::isfinite(hi)) {
      throw std::domain_error("student_t quantile: tail area too small to bracket");
    }
  }
  double t = std::clamp(-std_normal_quantile(q), lo, hi);
  if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);

  for (int iter = 0; iter < 400; ++iter) {
    const double f = t_upper_tail(t, nu) - q;
    if (f == 0.0) return t;
    if (f > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double pdf = student_t_pdf(t, nu);
    double next = pdf > 0.0 ? t + f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
      return next;
    }
    t = next;
  }
  return t;
}

double student_t_quantile(double p, int df) {
  check_df(df);
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("student_t_quantile: p must lie in (0,1)");
  if (p == 0.5) return 0.0;
  return p < 0.5 ? -student_t_upper_quantile(p, df) : student_t_upper_quantile(1.0 - p, df);
}

double sample_standard_normal(RngStream& rng) { return rng.next_normal(); }

double sample_uniform(double a, double b, RngStream& rng) {
  if (!(a < b)) throw std::domain_error("sample_uniform: requires a < b");
  const double u = a + (b - a) * rng.next_double();
  return std::clamp(u, a, b);
}

int sample_bernoulli(double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sample_bernoulli: p must lie in [0,1]");
  return rng.next_double() < p ? 1 : 0;
}

BivariateNormalSampler::BivariateNormalSampler(const BivariateGaussian& dist)
    : mean_(dist.mean), factor_(Eigen::Matrix2d::Zero()) {
  const auto& c = dist.covariance;
  if (!c.allFinite() || !mean_.allFinite()) throw InvalidCovarianceError("bivariate normal: non-finite parameters");
  const double scale = std::max({1.0, std::abs(c(0, 0)), std::abs(c(1, 1))});
  if (std::abs(c(0, 1) - c(1, 0)) > 1e-12 * scale) {
    throw InvalidCovarianceError("bivariate normal: covariance not symmetric");
  }
  if (c(0, 0) < 0.0 || c(1, 1) < 0.0) {
    throw InvalidCovarianceError("bivariate normal: negative variance");
  }
  const double c12 = 0.5 * (c(0, 1) + c(1, 0));
  const double half_trace = 0.5 * (c(0, 0) + c(1, 1));
  const double half_gap = 0.5 * (c(0, 0) - c(1, 1));
  const double radius = std::hypot(half_gap, c12);
  const double lambda_max = half_trace + radius;
  const double lambda_min = half_trace - radius;
  if (lambda_min < -1e-8) {
    throw InvalidCovarianceError("bivariate normal: covariance has a negative eigenvalue");
  }
  if (c(0, 0) * c(1, 1) - c12 * c12 < -1e-12 * scale * scale) {
    throw InvalidCovarianceError("bivariate normal: negative determinant");
  }

  if (lambda_max <= 0.0) return;  // zero matrix: draws equal the mean

  if (lambda_min > 1e-10 * lambda_max) {
    const double l11 = std::sqrt(c(0, 0));
    const double l21 = c12 / l11;
    factor_ << l11, 0.0,
               l21, std::sqrt(std::max(c(1, 1) - l21 * l21, 0.0));
    return;
  }

  // Near-singular: eigenvector of lambda_max, orthogonal complement for lambda_min.
  Eigen::Vector2d v1;
  if (radius == 0.0) {
    v1 << 1.0, 0.0;
  } else if (half_gap >= 0.0) {
    v1 << lambda_max - c(1, 1), c12;
  } else {
    v1 << c12, lambda_max - c(0, 0);
  }
  v1.normalize();
  const Eigen::Vector2d v2(-v1(1), v1(0));
  const double s1 = std::sqrt(lambda_max);
  const double s2 = std::sqrt(std::max(lambda_min, 0.0));
  factor_.col(0) = v1 * s1;
  factor_.col(1) = v2 * s2;
}

Eigen::Vector2d BivariateNormalSampler::draw(RngStream& rng) const {
  const double z1 = rng.next_normal();
  const double z2 = rng.next_normal();
  return mean_ + factor_ * Eigen::Vector2d(z1, z2);
}

Eigen::Vector2d sample_bivariate_normal(const BivariateGaussian& dist, RngStream& rng) {
  return BivariateNormalSampler(dist).draw(rng);
}

}  // namespace pipkit
