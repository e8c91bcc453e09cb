#include "pipkit/core.hpp"

#include <cmath>
#include <set>

namespace pipkit {

Dataset::Dataset(Eigen::VectorXd outcomes, Eigen::MatrixXd covariates,
                 std::vector<std::string> column_names)
    : outcomes_(std::move(outcomes)),
      covariates_(std::move(covariates)),
      column_names_(std::move(column_names)) {
  if (outcomes_.size() < 2) {
    throw std::invalid_argument("Dataset: at least two observations required");
  }
  if (covariates_.rows() != outcomes_.size()) {
    throw std::invalid_argument("Dataset: covariate rows do not match outcome length");
  }
  if (static_cast<std::size_t>(covariates_.cols()) != column_names_.size()) {
    throw std::invalid_argument("Dataset: column name count does not match covariate columns");
  }
  std::set<std::string_view> seen;
  for (const auto& name : column_names_) {
    if (name.empty()) throw std::invalid_argument("Dataset: empty column name");
    if (!seen.insert(name).second) {
      throw std::invalid_argument("Dataset: duplicate column name '" + name + "'");
    }
  }
  if (!outcomes_.allFinite()) throw std::invalid_argument("Dataset: non-finite outcome");
  if (covariates_.size() > 0 && !covariates_.allFinite()) {
    throw std::invalid_argument("Dataset: non-finite covariate value");
  }
}

bool Dataset::has_column(std::string_view name) const noexcept {
  for (const auto& c : column_names_) {
    if (c == name) return true;
  }
  return false;
}

std::size_t Dataset::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < column_names_.size(); ++j) {
    if (column_names_[j] == name) return j;
  }
  throw std::invalid_argument("Dataset: unknown column '" + std::string(name) + "'");
}

Eigen::VectorXd Dataset::column(std::string_view name) const {
  return covariates_.col(static_cast<Eigen::Index>(column_index(name)));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m);
  Eigen::MatrixXd x(m, covariates_.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    if (r >= outcomes_.size()) throw std::out_of_range("Dataset::subset: row out of range");
    y(i) = outcomes_(r);
    x.row(i) = covariates_.row(r);
  }
  return Dataset(std::move(y), std::move(x), column_names_);
}

Dataset Dataset::with_outcomes(Eigen::VectorXd outcomes) const {
  return Dataset(std::move(outcomes), covariates_, column_names_);
}

Dataset Dataset::with_column(std::string_view name, Eigen::VectorXd values) const {
  if (values.size() != outcomes_.size()) {
    throw std::invalid_argument("Dataset::with_column: length mismatch");
  }
  if (has_column(name)) {
    Eigen::MatrixXd x = covariates_;
    x.col(static_cast<Eigen::Index>(column_index(name))) = values;
    return Dataset(outcomes_, std::move(x), column_names_);
  }
  Eigen::MatrixXd x(covariates_.rows(), covariates_.cols() + 1);
  x.leftCols(covariates_.cols()) = covariates_;
  x.col(covariates_.cols()) = values;
  auto names = column_names_;
  names.emplace_back(name);
  return Dataset(outcomes_, std::move(x), std::move(names));
}

bool is_binary_column(const Dataset& data, std::string_view name) {
  const auto col = data.column(name);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (col(i) != 0.0 && col(i) != 1.0) return false;
  }
  return true;
}

double squared_loss(double prediction, double observed) {
  if (!std::isfinite(prediction) || !std::isfinite(observed)) {
    throw std::invalid_argument("squared_loss: non-finite input");
  }
  const double r = prediction - observed;
  return r * r;
}

LossFunction::LossFunction(LossKind kind, std::string name, Fn fn)
    : kind_(kind), name_(std::move(name)), fn_(std::move(fn)) {}

LossFunction LossFunction::squared_error() {
  return LossFunction(LossKind::SquaredError, "squared_error", nullptr);
}

LossFunction LossFunction::custom(std::string name, Fn fn) {
  if (!fn) throw std::invalid_argument("LossFunction::custom: empty callable");
  return LossFunction(LossKind::Custom, std::move(name), std::move(fn));
}

double LossFunction::operator()(double prediction, double observed) const {
  if (kind_ == LossKind::SquaredError) return squared_loss(prediction, observed);
  const double v = fn_(prediction, observed);
  if (!std::isfinite(v) || v < 0.0) {
    throw std::domain_error("LossFunction '" + name_ + "' returned a negative or non-finite value");
  }
  return v;
}

double improvement_indicator(double loss_full, double loss_null, TiePolicy policy) {
  if (!std::isfinite(loss_full) || !std::isfinite(loss_null)) {
    throw std::invalid_argument("improvement_indicator: non-finite loss");
  }
  if (loss_full < loss_null) return 1.0;
  if (loss_full > loss_null) return 0.0;
  return policy == TiePolicy::HalfCredit ? 0.5 : 0.0;
}

std::string_view to_string(TiePolicy policy) noexcept {
  return policy == TiePolicy::HalfCredit ? "half" : "strict";
}

TiePolicy parse_tie_policy(std::string_view text) {
  if (text == "strict") return TiePolicy::Strict;
  if (text == "half" || text == "halfcredit") return TiePolicy::HalfCredit;
  throw std::invalid_argument("unknown tie policy '" + std::string(text) + "'");
}

void PipEstimate::validate() const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(estimate)) throw std::logic_error("PipEstimate: estimate outside [0,1]");
  if (lower_bound && (!in_unit(*lower_bound) || *lower_bound > estimate)) {
    throw std::logic_error("PipEstimate: lower bound invalid");
  }
  if (upper_bound && (!in_unit(*upper_bound) || *upper_bound < estimate)) {
    throw std::logic_error("PipEstimate: upper bound invalid");
  }
}

}  // namespace pipkit
