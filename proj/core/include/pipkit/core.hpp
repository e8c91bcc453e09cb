#ifndef PIPKIT_CORE_HPP
#define PIPKIT_CORE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pipkit {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Design matrix without full column rank.
struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few observations for the requested fit.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Covariance matrix is not positive semi-definite within tolerance.
struct InvalidCovarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A resampling estimator could not complete; what() carries the cause.
struct EstimationFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Outcome vector plus an n x d covariate matrix with named columns.
///
/// Invariants (checked on construction): n >= 2, every entry finite,
/// column names unique and non-empty, matrix shape matches the names.
class Dataset {
 public:
  Dataset(Eigen::VectorXd outcomes, Eigen::MatrixXd covariates,
          std::vector<std::string> column_names);

  std::size_t n() const noexcept { return static_cast<std::size_t>(outcomes_.size()); }
  std::size_t d() const noexcept { return column_names_.size(); }

  const Eigen::VectorXd& outcomes() const noexcept { return outcomes_; }
  const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
  const std::vector<std::string>& column_names() const noexcept { return column_names_; }

  double outcome(std::size_t row) const { return outcomes_(static_cast<Eigen::Index>(row)); }
  double value(std::size_t row, std::size_t col) const {
    return covariates_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  bool has_column(std::string_view name) const noexcept;
  /// Throws std::invalid_argument for an unknown column.
  std::size_t column_index(std::string_view name) const;
  Eigen::VectorXd column(std::string_view name) const;

  /// Rows in the given order; duplicates allowed.
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_outcomes(Eigen::VectorXd outcomes) const;
  Dataset with_column(std::string_view name, Eigen::VectorXd values) const;

 private:
  Eigen::VectorXd outcomes_;
  Eigen::MatrixXd covariates_;
  std::vector<std::string> column_names_;
};

/// True when every value of the named column is exactly 0 or 1.
bool is_binary_column(const Dataset& data, std::string_view name);

// ---------------------------------------------------------------------------
// Losses and the improvement indicator
// ---------------------------------------------------------------------------

/// (prediction - observed)^2. Throws std::invalid_argument on non-finite input.
double squared_loss(double prediction, double observed);

enum class LossKind { SquaredError, Custom };

/// Loss evaluated as L(prediction, observed) >= 0.
class LossFunction {
 public:
  using Fn = std::function<double(double prediction, double observed)>;

  static LossFunction squared_error();
  /// User extension point; the callable must return finite, nonnegative values.
  static LossFunction custom(std::string name, Fn fn);

  LossKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double operator()(double prediction, double observed) const;

 private:
  LossFunction(LossKind kind, std::string name, Fn fn);

  LossKind kind_;
  std::string name_;
  Fn fn_;
};

enum class TiePolicy {
  Strict,      ///< equal losses count 0
  HalfCredit,  ///< equal losses count 1/2
};

/// 1 if the full model's loss is smaller, 0 if larger, ties per policy.
double improvement_indicator(double loss_full, double loss_null, TiePolicy policy);

std::string_view to_string(TiePolicy policy) noexcept;
/// Accepts "strict" and "half" / "halfcredit" (case-sensitive).
TiePolicy parse_tie_policy(std::string_view text);

// ---------------------------------------------------------------------------
// PipEstimate
// ---------------------------------------------------------------------------

struct PipEstimate {
  double estimate = 0.5;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::string method;
  std::optional<std::uint64_t> seed;
  /// k, repeats, n_train, n_test, n_mc, delta_mse ... as applicable.
  std::map<std::string, double> meta;

  /// Throws std::logic_error when estimate or bounds leave [0,1] or are unordered.
  void validate() const;
};

}  // namespace pipkit

#endif  // PIPKIT_CORE_HPP
