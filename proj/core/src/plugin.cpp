#include "pipkit/plugin.hpp"

#include "pipkit/dists.hpp"
#include "pipkit/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pipkit {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string(what) + " must be finite");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be positive and finite");
  }
}

std::string tagged(const char* base, PlugInTarget target) {
  return target == PlugInTarget::Theoretical ? std::string(base) + "_theoretical" : std::string(base);
}

// (1/(b-a)) * integral over [a, b] of Phi(scale * |x - centre|), split at the
// kink when it lies inside the interval.
double integrate_kinked(double scale, double centre, double a, double b, const QuadratureRule& rule) {
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = mid + half * rule.nodes[i];
      acc += rule.weights[i] * std_normal_cdf(scale * std::abs(x - centre));
    }
    return acc * half;
  };
  double total;
  if (centre > a && centre < b) {
    total = piece(a, centre) + piece(centre, b);
  } else {
    total = piece(a, b);
  }
  return total / (b - a);
}

void require_mc_options(const MonteCarloOptions& options) {
  if (options.n_mc == 0) throw std::invalid_argument("n_mc must be >= 1");
}

// Runs `chunk_body(rng, draws)` over ceil(n_mc / kMonteCarloChunk) units and
// sums the per-unit scores in unit order.
template <class ChunkBody>
double chunked_mean(std::size_t n_draws, unsigned threads, const RngStream& rng, ChunkBody&& chunk_body) {
  const std::size_t units = (n_draws + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<double> scores(units, 0.0);
  parallel_for(units, resolve_threads(threads), [&](std::size_t u) {
    const std::size_t begin = u * kMonteCarloChunk;
    const std::size_t draws = std::min(kMonteCarloChunk, n_draws - begin);
    RngStream local = rng.substream(u);
    scores[u] = chunk_body(local, draws);
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(n_draws);
}

}  // namespace

void TwoSampleParams::validate() const {
  require_finite(beta0, "beta0");
  require_finite(beta1, "beta1");
  require_positive(sigma, "sigma");
}

void UniformCovariateParams::validate() const {
  require_finite(beta0, "beta0");
  require_finite(beta1, "beta1");
  require_positive(sigma, "sigma");
  require_finite(a, "a");
  require_finite(b, "b");
  if (!(a < b)) throw std::domain_error("uniform covariate support requires a < b");
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

PipEstimate pip_c1(double beta1_hat, double sigma_hat, PlugInTarget target) {
  require_finite(beta1_hat, "beta1_hat");
  require_positive(sigma_hat, "sigma_hat");
  PipEstimate out;
  out.method = tagged("c1", target);
  out.estimate = beta1_hat == 0.0 ? 0.5 : std_normal_cdf(std::abs(beta1_hat) / (4.0 * sigma_hat));
  return out;
}

PipEstimate pip_c1(const OLSFit& full_fit, PlugInTarget target) {
  if (full_fit.covariate_names().size() != 1) {
    throw std::invalid_argument("pip_c1: full model must have exactly one covariate");
  }
  return pip_c1(full_fit.coefficients()(1), full_fit.residual_sd(), target);
}

PipEstimate pip_c2(const Dataset& data, const OLSFit& null_fit, const OLSFit& full_fit,
                   PlugInTarget target) {
  if (!null_fit.covariate_names().empty()) {
    throw std::invalid_argument("pip_c2: null model must be intercept-only");
  }
  if (full_fit.covariate_names().size() != 1) {
    throw std::invalid_argument("pip_c2: full model must have exactly one covariate");
  }
  const auto& group = full_fit.covariate_names().front();
  if (!is_binary_column(data, group)) {
    throw std::invalid_argument("pip_c2: covariate '" + group + "' is not 0/1");
  }
  const double b00 = null_fit.coefficients()(0);
  const double b01 = full_fit.coefficients()(0);
  const double b11 = full_fit.coefficients()(1);

  PipEstimate out;
  out.method = tagged("c2", target);
  if (b11 == 0.0) {
    out.estimate = 0.5;
    return out;
  }
  const double mid0 = 0.5 * (b00 + b01);
  const double mid1 = 0.5 * (b00 + b01 + b11);

  const std::size_t col = data.column_index(group);
  std::size_t n0 = 0, n1 = 0, below0 = 0, below1 = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double y = data.outcome(i);
    if (data.value(i, col) == 0.0) {
      ++n0;
      below0 += y < mid0 ? 1 : 0;
    } else {
      ++n1;
      below1 += y < mid1 ? 1 : 0;
    }
  }
  if (n0 == 0 || n1 == 0) throw std::invalid_argument("pip_c2: both groups must be non-empty");
  const double f0 = static_cast<double>(below0) / static_cast<double>(n0);
  const double f1 = static_cast<double>(below1) / static_cast<double>(n1);
  out.estimate = b11 > 0.0 ? 0.5 * (1.0 - f1) + 0.5 * f0 : 0.5 * (1.0 - f0) + 0.5 * f1;
  return out;
}

PipEstimate pip_theoretical_two_sample(const TwoSampleParams& params) {
  params.validate();
  PipEstimate out;
  out.method = "theoretical_two_sample";
  out.estimate =
      params.beta1 == 0.0 ? 0.5 : std_normal_cdf(std::abs(params.beta1) / (4.0 * params.sigma));
  return out;
}

QuadratureRule gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("gauss_legendre: points must be >= 1");
  const auto n = static_cast<std::size_t>(points);
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th largest root, refined by Newton.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        const double jd = static_cast<double>(j);
        p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

PipEstimate pip_theoretical_uniform(const UniformCovariateParams& params, int quad_points) {
  params.validate();
  PipEstimate out;
  out.method = "theoretical_uniform";
  out.meta["quad_points"] = quad_points;
  if (params.beta1 == 0.0) {
    out.estimate = 0.5;
    return out;
  }
  const double k = 0.5 * (params.a + params.b);
  const double scale = std::abs(params.beta1) / (2.0 * params.sigma);
  out.estimate = integrate_kinked(scale, k, params.a, params.b, gauss_legendre(quad_points));
  return out;
}

PipEstimate pip_plugin_uniform(double beta1_hat, double sigma_hat, double x_bar, double a, double b,
                               int quad_points) {
  require_finite(beta1_hat, "beta1_hat");
  require_positive(sigma_hat, "sigma_hat");
  require_finite(x_bar, "x_bar");
  if (!(a < b)) throw std::domain_error("pip_plugin_uniform: requires a < b");
  PipEstimate out;
  out.method = "c1_uniform";
  out.meta["quad_points"] = quad_points;
  if (beta1_hat == 0.0) {
    out.estimate = 0.5;
    return out;
  }
  const double scale = std::abs(beta1_hat) / (2.0 * sigma_hat);
  out.estimate = integrate_kinked(scale, x_bar, a, b, gauss_legendre(quad_points));
  return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo expected PIP
// ---------------------------------------------------------------------------

PipEstimate pip_expected_two_sample_mc(double beta1, double sigma, std::size_t n,
                                       const MonteCarloOptions& options, const RngStream& rng) {
  require_finite(beta1, "beta1");
  require_positive(sigma, "sigma");
  if (n < 4 || n % 2 != 0) {
    throw std::invalid_argument("pip_expected_two_sample_mc: n must be even and >= 4 (balanced design)");
  }
  require_mc_options(options);

  const double nd = static_cast<double>(n);
  const double s2 = sigma * sigma;
  BivariateGaussian dist;
  dist.covariance << s2 * (1.0 + 2.0 / nd), s2 * (1.0 + 1.0 / nd), s2 * (1.0 + 1.0 / nd),
      s2 * (1.0 + 1.0 / nd);
  dist.mean = Eigen::Vector2d(0.0, -0.5 * beta1);
  const BivariateNormalSampler lower(dist);
  dist.mean = Eigen::Vector2d(0.0, 0.5 * beta1);
  const BivariateNormalSampler upper(dist);

  const TiePolicy ties = options.ties;
  const double mean = chunked_mean(options.n_mc, options.threads, rng, [&](RngStream& r, std::size_t draws) {
    double score = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const Eigen::Vector2d e = (r.next_double() < 0.5 ? lower : upper).draw(r);
      score += improvement_indicator(e(0) * e(0), e(1) * e(1), ties);
    }
    return score;
  });

  PipEstimate out;
  out.method = "expected_two_sample";
  out.estimate = mean;
  out.seed = rng.master_seed();
  out.meta["n_mc"] = static_cast<double>(options.n_mc);
  out.meta["n"] = nd;
  return out;
}

CoefficientMoments CoefficientMoments::from_fit(const OLSFit& fit, double covariate_mean) {
  if (fit.covariate_names().size() != 1) {
    throw std::invalid_argument("CoefficientMoments::from_fit: expected a simple regression");
  }
  const auto& cov = fit.coef_covariance();
  CoefficientMoments m;
  m.var_intercept = cov(0, 0);
  m.var_slope = cov(1, 1);
  m.cov_intercept_slope = cov(0, 1);
  m.covariate_mean = covariate_mean;
  return m;
}

PipEstimate pip_expected_uniform_mc(const UniformCovariateParams& params,
                                    const CoefficientMoments& moments,
                                    const MonteCarloOptions& options, const RngStream& rng) {
  params.validate();
  require_mc_options(options);
  if (!(moments.var_intercept >= 0.0) || !(moments.var_slope >= 0.0) ||
      !std::isfinite(moments.var_intercept) || !std::isfinite(moments.var_slope) ||
      !std::isfinite(moments.cov_intercept_slope) || !std::isfinite(moments.covariate_mean)) {
    throw InvalidCovarianceError("pip_expected_uniform_mc: invalid coefficient moments");
  }
  const double c2 = moments.cov_intercept_slope * moments.cov_intercept_slope;
  if (c2 > moments.var_intercept * moments.var_slope * (1.0 + 1e-10) + 1e-300) {
    throw InvalidCovarianceError("pip_expected_uniform_mc: coefficient covariance is not PSD");
  }

  const double s2 = params.sigma * params.sigma;
  const double vb0 = moments.var_intercept;
  const double vb1 = moments.var_slope;
  const double c = moments.cov_intercept_slope;
  const double xbar = moments.covariate_mean;
  const double sigma22 = s2 + vb0 + xbar * xbar * vb1 + 2.0 * xbar * c;
  const TiePolicy ties = options.ties;

  const double mean = chunked_mean(options.n_mc, options.threads, rng, [&](RngStream& r, std::size_t draws) {
    double score = 0.0;
    BivariateGaussian dist;
    for (std::size_t i = 0; i < draws; ++i) {
      const double xs = sample_uniform(params.a, params.b, r);
      dist.mean = Eigen::Vector2d(0.0, params.beta1 * (xs - xbar));
      const double s11 = s2 + vb0 + xs * xs * vb1 + 2.0 * xs * c;
      const double s12 = s2 + vb0 + xs * c + xbar * c + xbar * xs * vb1;
      dist.covariance << s11, s12, s12, sigma22;
      const Eigen::Vector2d e = sample_bivariate_normal(dist, r);
      score += improvement_indicator(e(0) * e(0), e(1) * e(1), ties);
    }
    return score;
  });

  PipEstimate out;
  out.method = "expected_uniform";
  out.estimate = mean;
  out.seed = rng.master_seed();
  out.meta["n_mc"] = static_cast<double>(options.n_mc);
  return out;
}

// ---------------------------------------------------------------------------
// Empirical conditional PIP
// ---------------------------------------------------------------------------

TwoSampleProcess::TwoSampleProcess(TwoSampleParams params) : params_(params) { params_.validate(); }

double TwoSampleProcess::draw(RngStream& rng, std::span<double> x) const {
  const double g = static_cast<double>(sample_bernoulli(0.5, rng));
  x[0] = g;
  return params_.beta0 + params_.beta1 * g + params_.sigma * rng.next_normal();
}

UniformLinearProcess::UniformLinearProcess(UniformCovariateParams params) : params_(params) {
  params_.validate();
}

double UniformLinearProcess::draw(RngStream& rng, std::span<double> x) const {
  const double xs = sample_uniform(params_.a, params_.b, rng);
  x[0] = xs;
  return params_.beta0 + params_.beta1 * xs + params_.sigma * rng.next_normal();
}

namespace {

std::vector<std::size_t> map_columns(const FittedModel& model, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& col : model.covariate_names()) {
    std::size_t j = 0;
    while (j < names.size() && names[j] != col) ++j;
    if (j == names.size()) {
      throw std::invalid_argument("pip_conditional_empirical: truth does not generate column '" + col + "'");
    }
    idx.push_back(j);
  }
  return idx;
}

}  // namespace

PipEstimate pip_conditional_empirical(const FittedModel& null_fit, const FittedModel& full_fit,
                                      const DataGeneratingProcess& truth, std::size_t n_t,
                                      const RngStream& rng, const LossFunction& loss, TiePolicy ties,
                                      unsigned threads) {
  if (n_t == 0) throw std::invalid_argument("pip_conditional_empirical: n_t must be >= 1");
  const auto& names = truth.column_names();
  const auto idx0 = map_columns(null_fit, names);
  const auto idx1 = map_columns(full_fit, names);

  const double mean = chunked_mean(n_t, threads, rng, [&](RngStream& r, std::size_t draws) {
    std::vector<double> x(names.size());
    std::vector<double> x0(idx0.size());
    std::vector<double> x1(idx1.size());
    double score = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double y = truth.draw(r, x);
      for (std::size_t j = 0; j < idx0.size(); ++j) x0[j] = x[idx0[j]];
      for (std::size_t j = 0; j < idx1.size(); ++j) x1[j] = x[idx1[j]];
      score += improvement_indicator(loss(full_fit.predict(x1), y), loss(null_fit.predict(x0), y), ties);
    }
    return score;
  });

  PipEstimate out;
  out.method = "conditional_empirical";
  out.estimate = mean;
  out.seed = rng.master_seed();
  out.meta["n_t"] = static_cast<double>(n_t);
  return out;
}

}  // namespace pipkit
