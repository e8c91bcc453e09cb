#ifndef PIPKIT_MODELS_HPP
#define PIPKIT_MODELS_HPP

#include "pipkit/core.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pipkit {

/// Deterministic predictor from a covariate vector ordered as covariate_names().
/// Implementations are immutable after fitting and safe for concurrent use.
class FittedModel {
 public:
  virtual ~FittedModel() = default;

  virtual std::string family() const = 0;
  virtual const std::vector<std::string>& covariate_names() const = 0;
  /// Throws std::invalid_argument when x.size() != covariate_names().size().
  virtual double predict(std::span<const double> x) const = 0;

  /// Predictions for the given rows of `data`, looking columns up by name.
  virtual std::vector<double> predict_rows(const Dataset& data,
                                           std::span<const std::size_t> rows) const;
};

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

/// Least-squares fit of y on [1, covariates...].
class OLSFit final : public FittedModel {
 public:
  OLSFit(Eigen::VectorXd coefficients, double residual_variance, Eigen::MatrixXd coef_covariance,
         std::size_t n, std::vector<std::string> covariate_names);

  std::string family() const override { return "ols"; }
  const std::vector<std::string>& covariate_names() const override { return covariate_names_; }
  double predict(std::span<const double> x) const override;
  std::vector<double> predict_rows(const Dataset& data,
                                   std::span<const std::size_t> rows) const override;

  /// Intercept first.
  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  /// RSS / (n - p).
  double residual_variance() const noexcept { return residual_variance_; }
  double residual_sd() const;
  /// residual_variance * (X^T X)^{-1}.
  const Eigen::MatrixXd& coef_covariance() const noexcept { return coef_covariance_; }
  std::size_t n() const noexcept { return n_; }

 private:
  Eigen::VectorXd coefficients_;
  double residual_variance_;
  Eigen::MatrixXd coef_covariance_;
  std::size_t n_;
  std::vector<std::string> covariate_names_;
};

/// QR (column-pivoted Householder) least squares with rank detection.
/// Throws InsufficientDataError when n <= p and SingularDesignError when the
/// design [1, covariates] is rank deficient.
OLSFit fit_ols(const Dataset& data, const std::vector<std::string>& covariates);

// ---------------------------------------------------------------------------
// Gradient boosting
// ---------------------------------------------------------------------------

struct GBMHyperparams {
  int n_trees = 50;
  int interaction_depth = 2;
  double shrinkage = 0.1;
  int min_obs_per_node = 2;

  void validate() const;
};

/// Binary regression tree stored as a flat node array; node 0 is the root.
/// Rows with x[column] <= threshold go left.
struct RegressionTree {
  struct Node {
    int column = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  ///< leaf value
    std::size_t n_obs = 0;
    int depth = 0;
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;
  bool is_stump_noop() const { return nodes.size() == 1 && nodes.front().value == 0.0; }
};

class GBMFit final : public FittedModel {
 public:
  GBMFit(std::vector<RegressionTree> trees, double initial_prediction, GBMHyperparams hp,
         std::vector<std::string> covariate_names);

  std::string family() const override { return "gbm"; }
  const std::vector<std::string>& covariate_names() const override { return covariate_names_; }
  double predict(std::span<const double> x) const override;

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  double initial_prediction() const noexcept { return initial_prediction_; }
  double shrinkage() const noexcept { return hp_.shrinkage; }
  const GBMHyperparams& hyperparams() const noexcept { return hp_; }

  /// Copy truncated to the first `n_trees` stages.
  GBMFit truncated(std::size_t n_trees) const;

 private:
  std::vector<RegressionTree> trees_;
  double initial_prediction_;
  GBMHyperparams hp_;
  std::vector<std::string> covariate_names_;
};

/// Stagewise least-squares boosting with depth-limited trees, fit on all rows
/// every round. Splits are exact greedy SSE reductions at midpoints of
/// consecutive distinct values; ties resolve to the lowest column index then
/// the smallest threshold. A stage with no admissible split contributes 0.
GBMFit fit_gbm(const Dataset& data, const std::vector<std::string>& covariates,
               const GBMHyperparams& hp = {});

// ---------------------------------------------------------------------------
// Model specifications used by the resampling estimators
// ---------------------------------------------------------------------------

enum class ModelFamily { OLS, GBM };

struct ModelSpec {
  ModelFamily family = ModelFamily::OLS;
  std::vector<std::string> covariates;
  GBMHyperparams gbm;

  static ModelSpec ols(std::vector<std::string> covariates);
  static ModelSpec gbm_model(std::vector<std::string> covariates, GBMHyperparams hp = {});
};

ModelFamily parse_model_family(std::string_view name);
std::string_view to_string(ModelFamily family) noexcept;

using Fitter = std::function<std::shared_ptr<const FittedModel>(const Dataset&, const ModelSpec&)>;

/// Dispatches to fit_ols / fit_gbm according to spec.family.
std::shared_ptr<const FittedModel> fit_model(const Dataset& data, const ModelSpec& spec);
Fitter default_fitter();

}  // namespace pipkit

#endif  // PIPKIT_MODELS_HPP
