#include "pipkit/models.hpp"

#include <Eigen/QR>

#include <cmath>

namespace pipkit {

std::vector<double> FittedModel::predict_rows(const Dataset& data,
                                              std::span<const std::size_t> rows) const {
  const auto& names = covariate_names();
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& name : names) cols.push_back(data.column_index(name));
  std::vector<double> x(cols.size());
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    for (std::size_t j = 0; j < cols.size(); ++j) x[j] = data.value(r, cols[j]);
    out.push_back(predict(x));
  }
  return out;
}

OLSFit::OLSFit(Eigen::VectorXd coefficients, double residual_variance,
               Eigen::MatrixXd coef_covariance, std::size_t n,
               std::vector<std::string> covariate_names)
    : coefficients_(std::move(coefficients)),
      residual_variance_(residual_variance),
      coef_covariance_(std::move(coef_covariance)),
      n_(n),
      covariate_names_(std::move(covariate_names)) {
  if (static_cast<std::size_t>(coefficients_.size()) != covariate_names_.size() + 1) {
    throw std::invalid_argument("OLSFit: coefficient count must be covariates + 1");
  }
}

double OLSFit::residual_sd() const { return std::sqrt(residual_variance_); }

double OLSFit::predict(std::span<const double> x) const {
  if (x.size() != covariate_names_.size()) {
    throw std::invalid_argument("OLSFit::predict: expected " +
                                std::to_string(covariate_names_.size()) + " covariates, got " +
                                std::to_string(x.size()));
  }
  double acc = coefficients_(0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    acc += coefficients_(static_cast<Eigen::Index>(j + 1)) * x[j];
  }
  return acc;
}

std::vector<double> OLSFit::predict_rows(const Dataset& data,
                                         std::span<const std::size_t> rows) const {
  std::vector<std::size_t> cols;
  cols.reserve(covariate_names_.size());
  for (const auto& name : covariate_names_) cols.push_back(data.column_index(name));
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    double acc = coefficients_(0);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      acc += coefficients_(static_cast<Eigen::Index>(j + 1)) * data.value(r, cols[j]);
    }
    out.push_back(acc);
  }
  return out;
}

OLSFit fit_ols(const Dataset& data, const std::vector<std::string>& covariates) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(covariates.size() + 1);
  if (n <= p) {
    throw InsufficientDataError("fit_ols: need n > p (n = " + std::to_string(n) +
                                ", p = " + std::to_string(p) + ")");
  }
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j) {
    design.col(j) = data.column(covariates[static_cast<std::size_t>(j - 1)]);
  }
  const Eigen::VectorXd& y = data.outcomes();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p) {
    throw SingularDesignError("fit_ols: design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
  }
  Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - design * beta;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - p);

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  Eigen::MatrixXd xtx_inv = perm * xtx_inv_perm * perm.transpose();
  xtx_inv = 0.5 * (xtx_inv + xtx_inv.transpose());

  return OLSFit(std::move(beta), sigma2, sigma2 * xtx_inv, data.n(), covariates);
}

}  // namespace pipkit
