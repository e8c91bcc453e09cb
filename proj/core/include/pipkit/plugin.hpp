#ifndef PIPKIT_PLUGIN_HPP
#define PIPKIT_PLUGIN_HPP

#include "pipkit/core.hpp"
#include "pipkit/models.hpp"
#include "pipkit/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pipkit {

/// Y | x ~ N(beta0 + beta1 x, sigma^2), x a balanced 0/1 group indicator.
struct TwoSampleParams {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double sigma = 1.0;

  void validate() const;
};

/// Y | x ~ N(beta0 + beta1 x, sigma^2), x ~ U[a, b].
struct UniformCovariateParams {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double sigma = 1.0;
  double a = 0.0;
  double b = 1.0;

  void validate() const;
};

/// Which PIP the closed-form plug-in value is reported for. The numbers are
/// identical; only the method tag differs.
enum class PlugInTarget { Conditional, Theoretical };

// ---------------------------------------------------------------------------
// Closed-form plug-in estimators (two-sample setting)
// ---------------------------------------------------------------------------

/// Phi(|beta1_hat| / (4 sigma_hat)); exactly 0.5 when beta1_hat == 0.
PipEstimate pip_c1(double beta1_hat, double sigma_hat,
                   PlugInTarget target = PlugInTarget::Conditional);
/// C1 from a fitted y ~ 1 + x model (slope and residual SD).
PipEstimate pip_c1(const OLSFit& full_fit, PlugInTarget target = PlugInTarget::Conditional);

/// Empirical-CDF plug-in. `null_fit` is y ~ 1, `full_fit` is y ~ 1 + x with
/// x a 0/1 column of `data`. Group CDFs use strict '<'. Returns 0.5 when the
/// fitted group effect is exactly zero.
PipEstimate pip_c2(const Dataset& data, const OLSFit& null_fit, const OLSFit& full_fit,
                   PlugInTarget target = PlugInTarget::Conditional);

// ---------------------------------------------------------------------------
// Theoretical PIP
// ---------------------------------------------------------------------------

/// Phi(|beta1| / (4 sigma)), 0.5 at beta1 == 0.
PipEstimate pip_theoretical_two_sample(const TwoSampleParams& params);

/// Two-piece integral over [a, K] and [K, b], K = (a+b)/2, of
/// Phi(|beta1 (x - K)| / (2 sigma)) / (b - a), by Gauss-Legendre quadrature
/// with `quad_points` nodes per piece.
PipEstimate pip_theoretical_uniform(const UniformCovariateParams& params, int quad_points = 64);

/// Plug-in counterpart for a fitted simple regression: the kink sits at the
/// sample covariate mean `x_bar` instead of the interval midpoint.
PipEstimate pip_plugin_uniform(double beta1_hat, double sigma_hat, double x_bar, double a, double b,
                               int quad_points = 64);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int points);

// ---------------------------------------------------------------------------
// Monte-Carlo expected PIP
// ---------------------------------------------------------------------------

/// Draws per Monte-Carlo work unit. Unit u uses rng.substream(u), so the
/// estimate does not depend on the number of threads.
inline constexpr std::size_t kMonteCarloChunk = 16384;

struct MonteCarloOptions {
  std::size_t n_mc = 100000;
  unsigned threads = 1;
  TiePolicy ties = TiePolicy::Strict;
};

/// Expected PIP for the balanced two-sample design from the two-component
/// bivariate normal mixture of (E1, E0). n must be even and >= 4.
PipEstimate pip_expected_two_sample_mc(double beta1, double sigma, std::size_t n,
                                       const MonteCarloOptions& options, const RngStream& rng);

/// Sampling moments of (beta0_hat, beta1_hat) for y ~ 1 + x plus the
/// training-sample covariate mean.
struct CoefficientMoments {
  double var_intercept = 0.0;
  double var_slope = 0.0;
  double cov_intercept_slope = 0.0;
  double covariate_mean = 0.0;

  /// From fit.coef_covariance(); `covariate_mean` is the training mean of x.
  static CoefficientMoments from_fit(const OLSFit& fit, double covariate_mean);
};

/// Expected PIP for simple regression with x* ~ U[a, b]: for each draw,
/// x* is sampled and (E1, E0) drawn from N((0, beta1 (x* - x_bar)), Sigma(x*)).
PipEstimate pip_expected_uniform_mc(const UniformCovariateParams& params,
                                    const CoefficientMoments& moments,
                                    const MonteCarloOptions& options, const RngStream& rng);

// ---------------------------------------------------------------------------
// Empirical conditional PIP against a known data-generating process
// ---------------------------------------------------------------------------

/// Source of fresh (x*, y*) pairs.
class DataGeneratingProcess {
 public:
  virtual ~DataGeneratingProcess() = default;
  virtual const std::vector<std::string>& column_names() const = 0;
  /// Writes x* (ordered as column_names()) into `x` and returns y*.
  virtual double draw(RngStream& rng, std::span<double> x) const = 0;
};

/// x* ~ Bernoulli(0.5), column "x".
class TwoSampleProcess final : public DataGeneratingProcess {
 public:
  explicit TwoSampleProcess(TwoSampleParams params);
  const std::vector<std::string>& column_names() const override { return names_; }
  double draw(RngStream& rng, std::span<double> x) const override;

 private:
  TwoSampleParams params_;
  std::vector<std::string> names_{"x"};
};

/// x* ~ U[a, b], column "x".
class UniformLinearProcess final : public DataGeneratingProcess {
 public:
  explicit UniformLinearProcess(UniformCovariateParams params);
  const std::vector<std::string>& column_names() const override { return names_; }
  double draw(RngStream& rng, std::span<double> x) const override;

 private:
  UniformCovariateParams params_;
  std::vector<std::string> names_{"x"};
};

/// (1/n_t) sum of improvement indicators over n_t fresh draws from `truth`.
/// Models look their covariates up in truth.column_names() by name.
PipEstimate pip_conditional_empirical(const FittedModel& null_fit, const FittedModel& full_fit,
                                      const DataGeneratingProcess& truth, std::size_t n_t,
                                      const RngStream& rng,
                                      const LossFunction& loss = LossFunction::squared_error(),
                                      TiePolicy ties = TiePolicy::Strict, unsigned threads = 1);

}  // namespace pipkit

#endif  // PIPKIT_PLUGIN_HPP
