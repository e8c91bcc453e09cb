#ifndef PIPKIT_DISTS_HPP
#define PIPKIT_DISTS_HPP

#include "pipkit/rng.hpp"

#include <Eigen/Core>

namespace pipkit {

// Scalar distribution numerics. All functions are pure and reentrant.

/// P(Z <= z), Z ~ N(0,1). Evaluated as erfc(-z/sqrt 2)/2, which keeps
/// full relative accuracy in the lower tail.
double std_normal_cdf(double z);
/// P(Z > z).
double std_normal_sf(double z);
double std_normal_pdf(double z);

/// Inverse of std_normal_cdf on (0, 1). Wichura's AS241 (PPND16) rational
/// approximation followed by one Newton step against std_normal_cdf.
/// Throws std::domain_error outside (0, 1).
double std_normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b), continued fraction by modified
/// Lentz iteration. Throws std::domain_error for a, b <= 0 or x outside [0,1].
double regularized_incomplete_beta(double a, double b, double x);

double student_t_pdf(double t, double df);
/// P(T <= t) for T ~ t(df). Throws std::domain_error for df < 1.
double student_t_cdf(double t, int df);
/// P(T > t), computed without cancellation in the upper tail.
double student_t_sf(double t, int df);
/// Inverse CDF by bracketed Newton iteration with bisection fallback.
double student_t_quantile(double p, int df);
/// t with student_t_sf(t, df) == q; avoids forming 1 - q for tiny tail areas.
double student_t_upper_quantile(double q, int df);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

double sample_standard_normal(RngStream& rng);
/// Uniform on [a, b]; requires a < b.
double sample_uniform(double a, double b, RngStream& rng);
/// Requires p in [0, 1].
int sample_bernoulli(double p, RngStream& rng);

struct BivariateGaussian {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
};

/// Factorizes a 2x2 covariance once and draws repeatedly.
///
/// Cholesky is used when the matrix is comfortably positive definite;
/// otherwise a symmetric eigendecomposition with negative eigenvalues
/// clamped to zero. Rejects (InvalidCovarianceError) asymmetric input,
/// a negative diagonal, or an eigenvalue below -1e-8.
class BivariateNormalSampler {
 public:
  explicit BivariateNormalSampler(const BivariateGaussian& dist);

  Eigen::Vector2d draw(RngStream& rng) const;
  const Eigen::Matrix2d& factor() const noexcept { return factor_; }

 private:
  Eigen::Vector2d mean_;
  Eigen::Matrix2d factor_;
};

Eigen::Vector2d sample_bivariate_normal(const BivariateGaussian& dist, RngStream& rng);

}  // namespace pipkit

#endif  // PIPKIT_DISTS_HPP
