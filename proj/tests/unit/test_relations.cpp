#include "pipkit/plugin.hpp"
#include "pipkit/relations.hpp"

#include "oracles.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <catch_amalgamated.hpp>

#include <cmath>

using namespace pipkit;
using Catch::Approx;

namespace {

double phi(double z) { return static_cast<double>(oracle::normal_cdf(z)); }

// Reference for the PIP of a p-value, built from Boost's t quantile and the
// long-double normal CDF.
double pip_of_p_reference(double p, int n) {
  const boost::math::students_t_distribution<double> td(n - 2);
  const double t = boost::math::quantile(boost::math::complement(td, p / 2));
  return phi(t / (2.0 * std::sqrt(static_cast<double>(n))));
}

Dataset groups(const std::vector<double>& y0, const std::vector<double>& y1) {
  const auto n = static_cast<Eigen::Index>(y0.size() + y1.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  Eigen::Index i = 0;
  for (double v : y0) {
    y(i) = v;
    x(i++, 0) = 0;
  }
  for (double v : y1) {
    y(i) = v;
    x(i++, 0) = 1;
  }
  return Dataset(y, x, {"x"});
}

}  // namespace

TEST_CASE("two-sample t-test examples", "[relations][ttest]") {
  const auto same = pvalue_two_sample(groups({1, 3}, {2, 2}));
  CHECK(same.t_statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const auto r = pvalue_two_sample(groups({0, 2}, {10, 12}));
  CHECK(r.beta1_hat == 10.0);
  CHECK(r.se_beta1 == Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r.t_statistic == Approx(7.0710678).margin(1e-6));
  CHECK(r.df == 2);
  const boost::math::students_t_distribution<double> t2(2);
  CHECK(r.p_value == Approx(2 * boost::math::cdf(boost::math::complement(t2, 7.0710678118654755))).epsilon(1e-10));
  CHECK(r.p_value == Approx(0.0194).margin(5e-5));
  CHECK(r.n0 == 2);
  CHECK(r.n1 == 2);
}

TEST_CASE("two-sample t-test handles unbalanced groups and errors", "[relations][ttest]") {
  // Groups {1,2,3} and {5,7}: means 2 and 6, pooled SS 2 + 2 on 3 df.
  const auto r = pvalue_two_sample(groups({1, 2, 3}, {5, 7}));
  CHECK(r.beta1_hat == 4.0);
  CHECK(r.se_beta1 == Approx(std::sqrt(4.0 / 3.0 * (1.0 / 3 + 1.0 / 2))).epsilon(1e-14));
  CHECK(r.df == 3);
  const boost::math::students_t_distribution<double> t3(3);
  CHECK(r.p_value == Approx(2 * boost::math::cdf(boost::math::complement(t3, r.t_statistic))).epsilon(1e-10));

  const auto exact = pvalue_two_sample(groups({1, 1}, {4, 4}));
  CHECK(std::isinf(exact.t_statistic));
  CHECK(exact.p_value == 0.0);

  CHECK_THROWS_AS(pvalue_two_sample(groups({1, 2, 3}, {})), std::invalid_argument);
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  Eigen::MatrixXd x(3, 1);
  x << 0, 2, 1;
  CHECK_THROWS_AS(pvalue_two_sample(Dataset(y, x, {"x"})), std::invalid_argument);
}

TEST_CASE("pip_from_pvalue examples", "[relations]") {
  CHECK(pip_from_pvalue(1.0, 20) == 0.5);
  CHECK(pip_from_pvalue(1.0, 400) == 0.5);
  CHECK(pip_from_pvalue(0.05, 20) == Approx(pip_of_p_reference(0.05, 20)).margin(1e-12));
  CHECK(pip_from_pvalue(0.05, 20) == Approx(0.592853).margin(5e-7));
  CHECK(pip_from_pvalue(0.05, 400) == Approx(pip_of_p_reference(0.05, 400)).margin(1e-12));
  CHECK(pip_from_pvalue(0.05, 400) == Approx(0.519601).margin(1e-6));
  CHECK_THROWS_AS(pip_from_pvalue(0.0, 20), std::domain_error);
  CHECK_THROWS_AS(pip_from_pvalue(1.5, 20), std::domain_error);
  CHECK_THROWS_AS(pip_from_pvalue(0.5, 2), std::domain_error);
}

TEST_CASE("pip_from_pvalue agrees with the reference over a grid", "[relations][property]") {
  for (int n : {3, 5, 20, 60, 400, 10000}) {
    for (double lp = -12; lp <= 0; lp += 0.25) {
      const double p = std::pow(10.0, lp);
      REQUIRE(pip_from_pvalue(p, n) == Approx(pip_of_p_reference(p, n)).margin(1e-11));
    }
  }
}

TEST_CASE("pvalue_from_pip inverts pip_from_pvalue", "[relations]") {
  CHECK(pvalue_from_pip(0.5, 20) == 1.0);
  CHECK(pvalue_from_pip(0.592853, 20) == Approx(0.05).margin(1e-5));
  CHECK(pvalue_from_pip(pip_from_pvalue(0.05, 20), 20) == Approx(0.05).margin(1e-12));
  for (int n : {20, 400}) {
    for (double p : {1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.99}) {
      REQUIRE(std::abs(pvalue_from_pip(pip_from_pvalue(p, n), n) - p) <= 1e-9);
    }
  }
  CHECK_THROWS_AS(pvalue_from_pip(0.4, 20), std::domain_error);
  CHECK_THROWS_AS(pvalue_from_pip(1.0, 20), std::domain_error);
}

TEST_CASE("pip_from_pvalue is monotone in p and n", "[relations][property]") {
  for (int n : {5, 20, 100, 400}) {
    double prev = 1.0;
    for (double lp = -10; lp <= 0; lp += 0.1) {
      const double v = pip_from_pvalue(std::pow(10.0, lp), n);
      // Small n and tiny p saturate at 1 in double precision.
      if (prev < 1.0) {
        REQUIRE(v < prev);
      } else {
        REQUIRE(v <= prev);
      }
      prev = v;
    }
  }
  for (double p : {1e-6, 0.001, 0.05, 0.5}) {
    double prev = 1.0;
    for (int n = 5; n <= 5000; n = n * 3 / 2) {
      const double v = pip_from_pvalue(p, n);
      if (prev < 1.0) {
        REQUIRE(v < prev);
      } else {
        REQUIRE(v <= prev);
      }
      REQUIRE(v > 0.5);
      prev = v;
    }
  }
}

TEST_CASE("asymptotic scaled log p", "[relations]") {
  CHECK(asymptotic_scaled_log_p(0.5) == 0.0);
  CHECK(asymptotic_scaled_log_p(phi(0.25)) == Approx(-0.5 * std::log(1.25)).margin(1e-12));
  CHECK(asymptotic_scaled_log_p(0.598706) == Approx(-0.111572).margin(1e-5));
  for (double pip = 0.01; pip < 1.0; pip += 0.01) {
    REQUIRE(asymptotic_scaled_log_p(pip) == Approx(asymptotic_scaled_log_p(1.0 - pip)).margin(1e-9));
    REQUIRE(asymptotic_scaled_log_p(pip) <= 0.0);
  }
  CHECK_THROWS_AS(asymptotic_scaled_log_p(0.0), std::domain_error);
  CHECK_THROWS_AS(asymptotic_scaled_log_p(1.0), std::domain_error);

  // log(p)/n approaches the limit as n grows at a fixed PIP.
  const double pip = 0.56;
  const double lim = asymptotic_scaled_log_p(pip);
  double prev_gap = 1e9;
  for (int n : {100, 1000, 10000}) {
    const double gap = std::abs(std::log(pvalue_from_pip(pip, n)) / n - lim);
    REQUIRE(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}

TEST_CASE("delta MSE from PIP", "[relations]") {
  CHECK(delta_mse_from_pip(0.5, 3.0) == 0.0);
  CHECK(delta_mse_from_pip(phi(0.25), 1.0) == Approx(-0.25).margin(1e-12));
  CHECK(delta_mse_from_pip(0.7, 2.0) == Approx(4.0 * delta_mse_from_pip(0.7, 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(delta_mse_from_pip(0.7, 0.0), std::domain_error);
  CHECK_THROWS_AS(delta_mse_from_pip(1.0, 1.0), std::domain_error);

  oracle::Gen g(21);
  for (int i = 0; i < 2000; ++i) {
    const double b = g.uniform(-10, 10);
    const double s = std::exp(g.uniform(-1, 1.5));
    REQUIRE(delta_mse_from_pip(pip_c1(b, s).estimate, s) == Approx(-b * b / 4).margin(1e-9 * (1 + b * b)));
  }
}

TEST_CASE("overlap from PIP", "[relations]") {
  CHECK(overlap_from_pip(0.5, 20) == 1.0);
  CHECK(overlap_from_pip(phi(1.0), 20) == Approx(2 * phi(-2.0 / std::sqrt(1.1))).margin(1e-12));
  CHECK(overlap_from_pip(0.841345, 20) == Approx(0.05652).margin(5e-5));
  for (int n : {4, 20, 400}) {
    double prev = 1.0 + 1e-12;
    for (double pip = 0.5; pip < 0.999; pip += 0.005) {
      const double v = overlap_from_pip(pip, n);
      REQUIRE(v < prev);
      REQUIRE(v > 0.0);
      prev = v;
    }
  }
  CHECK_THROWS_AS(overlap_from_pip(0.3, 20), std::domain_error);
}

TEST_CASE("two-proportion z-test", "[relations][proportion]") {
  CHECK(pvalue_two_proportion(10, 30, 10, 30) == 1.0);
  CHECK(pvalue_two_proportion(0, 30, 0, 20) == 1.0);
  CHECK(pvalue_two_proportion(30, 30, 20, 20) == 1.0);
  // z formula evaluated directly.
  const double p1 = 11.0 / 36, p2 = 21.0 / 36, pb = 32.0 / 72;
  const double z = (p1 - p2) / std::sqrt(pb * (1 - pb) * (2.0 / 36));
  CHECK(two_proportion_z(11, 36, 21, 36) == Approx(z).epsilon(1e-14));
  CHECK(z == Approx(-2.3717).margin(1e-4));
  CHECK(pvalue_two_proportion(11, 36, 21, 36) == Approx(2 * phi(-std::abs(z))).margin(1e-12));
  CHECK(pvalue_two_proportion(11, 36, 21, 36) == Approx(0.0177).margin(0.0005));
  CHECK(pvalue_two_proportion(21, 36, 11, 36) == pvalue_two_proportion(11, 36, 21, 36));
  CHECK_THROWS_AS(pvalue_two_proportion(5, 4, 1, 4), std::domain_error);
  CHECK_THROWS_AS(pvalue_two_proportion(1, 0, 1, 4), std::domain_error);
}

TEST_CASE("C1 and the t-test p-value are linked exactly", "[relations][property]") {
  // For balanced two-sample data, C1 = Phi(|b|/(4 s)) and the t-test p-value
  // map onto each other through pip_from_pvalue.
  oracle::Gen g(55);
  for (int trial = 0; trial < 300; ++trial) {
    const int half = g.integer(2, 60);
    const double shift = g.uniform(-2, 2);
    std::vector<double> y0, y1;
    for (int i = 0; i < half; ++i) {
      y0.push_back(g.normal());
      y1.push_back(shift + g.normal());
    }
    const auto d = groups(y0, y1);
    const auto fit = fit_ols(d, {"x"});
    const double c1 = pip_c1(fit).estimate;
    const auto test = pvalue_two_sample(d);
    if (test.p_value < 1e-300) continue;
    REQUIRE(pip_from_pvalue(test.p_value, static_cast<int>(d.n())) == Approx(c1).margin(1e-9));
  }
}
