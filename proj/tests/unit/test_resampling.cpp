#include "pipkit/plugin.hpp"
#include "pipkit/resampling.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

using namespace pipkit;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

Dataset make_xy(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd yy(n);
  Eigen::MatrixXd xx(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    xx(i, 0) = x[static_cast<std::size_t>(i)];
    yy(i) = y[static_cast<std::size_t>(i)];
  }
  return Dataset(yy, xx, {"x"});
}

// Balanced two-sample data, first half x = 0.
Dataset two_sample(oracle::Gen& g, int n, double beta1) {
  std::vector<double> x, y;
  for (int i = 0; i < n; ++i) {
    const double xi = i < n / 2 ? 0.0 : 1.0;
    x.push_back(xi);
    y.push_back(beta1 * xi + g.normal());
  }
  return make_xy(x, y);
}

// Least-squares line through a training set of two rows, or its mean, fitted
// by hand so the holdout example does not depend on fit_ols.
std::shared_ptr<const FittedModel> two_point_fitter(const Dataset& d, const ModelSpec& spec) {
  const double ybar = d.outcomes().mean();
  if (spec.covariates.empty()) {
    Eigen::VectorXd c(1);
    c << ybar;
    return std::make_shared<OLSFit>(c, 0.0, Eigen::MatrixXd::Zero(1, 1), d.n(), std::vector<std::string>{});
  }
  const double slope = (d.outcome(1) - d.outcome(0)) / (d.value(1, 0) - d.value(0, 0));
  Eigen::VectorXd c(2);
  c << d.outcome(0) - slope * d.value(0, 0), slope;
  return std::make_shared<OLSFit>(c, 0.0, Eigen::MatrixXd::Zero(2, 2), d.n(), std::vector<std::string>{"x"});
}

// Predicts 1 for rows with id < cutoff and 5 otherwise.
class CutoffModel final : public FittedModel {
 public:
  explicit CutoffModel(double cutoff) : cutoff_(cutoff) {}
  std::string family() const override { return "stub"; }
  const std::vector<std::string>& covariate_names() const override { return names_; }
  double predict(std::span<const double> x) const override { return x[0] < cutoff_ ? 1.0 : 5.0; }

 private:
  double cutoff_;
  std::vector<std::string> names_{"id"};
};

class ConstantModel final : public FittedModel {
 public:
  std::string family() const override { return "stub"; }
  const std::vector<std::string>& covariate_names() const override { return names_; }
  double predict(std::span<const double>) const override { return 0.0; }

 private:
  std::vector<std::string> names_;
};

}  // namespace

TEST_CASE("make_folds fold sizes", "[resampling][folds]") {
  RngStream r(1, 0);
  auto sizes = make_folds(10, 5, r).fold_sizes();
  CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 2, 2});
  sizes = make_folds(11, 5, r).fold_sizes();
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 2, 3});
  const auto loo = make_folds(4, 4, r);
  CHECK(loo.fold_sizes() == std::vector<std::size_t>{1, 1, 1, 1});
  std::set<int> distinct(loo.assignments.begin(), loo.assignments.end());
  CHECK(distinct.size() == 4);
  CHECK_THROWS_AS(make_folds(4, 5, r), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(4, 1, r), std::invalid_argument);
}

TEST_CASE("fold plans partition rows evenly", "[resampling][folds][property]") {
  oracle::Gen g(12);
  RngStream r(12, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(2, 200));
    const int k = g.integer(2, static_cast<int>(n));
    const auto plan = make_folds(n, k, r);
    const auto sizes = plan.fold_sizes();
    REQUIRE(*std::min_element(sizes.begin(), sizes.end()) >= 1);
    REQUIRE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    for (int j = 0; j < k; ++j) {
      REQUIRE(plan.test_rows(j).size() + plan.train_rows(j).size() == n);
    }
  }
}

TEST_CASE("stratified folds balance groups across folds", "[resampling][folds]") {
  RngStream r(3, 0);
  std::vector<double> groups(40, 0.0);
  std::fill(groups.begin() + 20, groups.end(), 1.0);
  const auto plan = make_stratified_folds(groups, 5, r);
  for (int j = 0; j < 5; ++j) {
    int ones = 0;
    for (auto i : plan.test_rows(j)) ones += groups[i] == 1.0;
    CHECK(ones == 4);
  }
  CHECK(plan.fold_sizes() == std::vector<std::size_t>{8, 8, 8, 8, 8});

  // Relabelling the groups gives the same plan.
  std::vector<double> flipped(groups.size());
  std::transform(groups.begin(), groups.end(), flipped.begin(), [](double v) { return 1.0 - v; });
  RngStream a(3, 1), b(3, 1);
  CHECK(make_stratified_folds(groups, 5, a).assignments == make_stratified_folds(flipped, 5, b).assignments);
}

TEST_CASE("hand-evaluated holdout on four rows", "[resampling][holdout]") {
  // Train on (0,1), (2,3): null predicts 2, full predicts 1 + x.
  // Row (1,0): both predict 2, losses 4 and 4 (tie).
  // Row (3,5): full 4 (loss 1) beats null 2 (loss 9).
  const auto d = make_xy({0, 2, 1, 3}, {1, 3, 0, 5});
  const std::vector<std::size_t> train{0, 1};
  const std::vector<std::size_t> test{2, 3};
  const auto strict = holdout_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), two_point_fitter,
                                  LossFunction::squared_error(), train, test, TiePolicy::Strict);
  CHECK(strict.estimate == 0.5);
  CHECK(strict.meta.at("n_train") == 2);
  CHECK(strict.meta.at("n_test") == 2);
  CHECK(strict.meta.at("delta_mse") == Approx(-4.0).epsilon(1e-14));
  const auto half = holdout_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), two_point_fitter,
                                LossFunction::squared_error(), train, test, TiePolicy::HalfCredit);
  CHECK(half.estimate == 0.75);
}

TEST_CASE("hand-evaluated k-fold on six rows", "[resampling][kfold]") {
  // Folds {0,1}, {2,3}, {4,5}. Fold 0 trains on x = 2..5 (line 1 + 0.75x,
  // mean 3.625) and wins on both test rows; fold 2 trains on x = 0..3
  // (line 0.65 + 0.65x, mean 1.625) and wins on both; fold 1 loses both.
  const auto d = make_xy({0, 1, 2, 3, 4, 5}, {0.5, 1.0, 3.0, 2.0, 5.0, 4.5});
  FoldPlan plan;
  plan.k = 3;
  plan.assignments = {0, 0, 1, 1, 2, 2};
  const auto e = kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                           LossFunction::squared_error(), plan);
  CHECK(e.estimate == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(e.method == "cv");
  CHECK(e.meta.at("k") == 3);
  CHECK(e.meta.at("delta_mse") == Approx(-5.1155694925028845).epsilon(1e-12));
}

TEST_CASE("k-fold weights folds equally", "[resampling][kfold]") {
  // Fold 0 = rows {0, 1}, fold 1 = rows 2..5. Full model wins only on row 0.
  Eigen::VectorXd y = Eigen::VectorXd::Ones(6);
  Eigen::MatrixXd id(6, 1);
  id << 0, 1, 2, 3, 4, 5;
  const Dataset d(y, id, {"id"});
  const Fitter stub = [](const Dataset&, const ModelSpec& s) -> std::shared_ptr<const FittedModel> {
    if (s.covariates.empty()) return std::make_shared<ConstantModel>();
    return std::make_shared<CutoffModel>(0.5);
  };
  FoldPlan plan;
  plan.k = 2;
  plan.assignments = {0, 0, 1, 1, 1, 1};
  const auto e = kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"id"}), stub, LossFunction::squared_error(), plan);
  CHECK(e.estimate == 0.25);  // (1/2 + 0) / 2, not the pooled 1/6
}

TEST_CASE("leave-one-out equals the pooled mean", "[resampling][kfold]") {
  oracle::Gen g(4);
  const auto d = two_sample(g, 20, -1.0);
  RngStream r(8, 0);
  const auto plan = make_folds(d.n(), static_cast<int>(d.n()), r);
  const auto e = kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                           LossFunction::squared_error(), plan);
  double pooled = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<std::size_t> train, test{i};
    for (std::size_t j = 0; j < d.n(); ++j)
      if (j != i) train.push_back(j);
    pooled += holdout_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                          LossFunction::squared_error(), train, test)
                  .estimate;
  }
  CHECK(e.estimate == Approx(pooled / static_cast<double>(d.n())).epsilon(1e-14));
}

TEST_CASE("identical specs tie everywhere", "[resampling]") {
  oracle::Gen g(5);
  const auto d = two_sample(g, 20, -1.0);
  ResamplingConfig cfg;
  cfg.group_column = "x";
  const RngStream r(9, 0);
  const auto s = ModelSpec::ols({"x"});
  CHECK(split_sample_pip(d, s, s, default_fitter(), LossFunction::squared_error(), cfg, r).estimate == 0.0);
  CHECK(kfold_pip(d, s, s, default_fitter(), LossFunction::squared_error(), cfg, r).estimate == 0.0);
  const auto rep = repeated_kfold_pip(d, s, s, default_fitter(), LossFunction::squared_error(), cfg, r);
  CHECK(rep.estimate == 0.0);
  CHECK(*rep.lower_bound == 0.0);
  CHECK(*rep.upper_bound == 0.0);
  cfg.tie_policy = TiePolicy::HalfCredit;
  CHECK(kfold_pip(d, s, s, default_fitter(), LossFunction::squared_error(), cfg, r).estimate == 0.5);
}

TEST_CASE("perfect full model scores one on the split sample", "[resampling][split]") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i);
    y.push_back(3.0 * i - 1.0);
  }
  const auto d = make_xy(x, y);
  ResamplingConfig cfg;
  const auto e = split_sample_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                                  LossFunction::squared_error(), cfg, RngStream(1, 2));
  CHECK(e.estimate == 1.0);
  CHECK(e.method == "split");
  CHECK(e.meta.at("n_train") == 15);
  CHECK(e.meta.at("n_test") == 15);
  cfg.split_ratio = 0.7;
  CHECK(split_sample_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                         LossFunction::squared_error(), cfg, RngStream(1, 2))
            .meta.at("n_train") == 21);
}

TEST_CASE("repeated k-fold reduces to k-fold for one repeat", "[resampling][repcv]") {
  oracle::Gen g(6);
  const auto d = two_sample(g, 30, -1.0);
  ResamplingConfig cfg;
  cfg.repeats = 1;
  const RngStream r(10, 3);
  const auto rep = repeated_kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                                      LossFunction::squared_error(), cfg, r);
  const auto one = kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                             LossFunction::squared_error(), cfg, r.substream(0));
  CHECK(rep.estimate == one.estimate);
  CHECK(*rep.lower_bound == rep.estimate);
  CHECK(*rep.upper_bound == rep.estimate);
  CHECK(rep.method == "repcv");
  CHECK(rep.meta.at("repeats") == 1);
  CHECK(rep.meta.at("k") == 5);
}

TEST_CASE("nearest-rank quantiles", "[resampling][repcv]") {
  std::vector<double> v;
  for (int i = 20; i >= 1; --i) v.push_back(i / 100.0);
  CHECK(nearest_rank_quantile(v, 0.05) == 0.01);
  CHECK(nearest_rank_quantile(v, 0.95) == 0.19);
  CHECK(nearest_rank_quantile(v, 0.0) == 0.01);
  CHECK(nearest_rank_quantile(v, 1.0) == 0.20);
  CHECK(nearest_rank_quantile({0.3}, 0.05) == 0.3);
  CHECK_THROWS_AS(nearest_rank_quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("repeated k-fold bounds from injected repeat estimates", "[resampling][repcv]") {
  // 100 rows, k = 5 gives equal folds, so each repeat's estimate is the share
  // of rows with id < cutoff. Repeat r sets cutoff r + 1: estimates 0.01..0.20.
  const int n = 100;
  Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd id(n, 1);
  for (int i = 0; i < n; ++i) id(i, 0) = i;
  const Dataset d(y, id, {"id"});
  auto full_fits = std::make_shared<std::atomic<int>>(0);
  const Fitter stub = [full_fits](const Dataset&, const ModelSpec& s) -> std::shared_ptr<const FittedModel> {
    if (s.covariates.empty()) return std::make_shared<ConstantModel>();
    const int call = full_fits->fetch_add(1);
    return std::make_shared<CutoffModel>(call / 5 + 1);
  };
  ResamplingConfig cfg;
  cfg.k = 5;
  cfg.repeats = 20;
  cfg.threads = 1;
  const auto e = repeated_kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"id"}), stub,
                                    LossFunction::squared_error(), cfg, RngStream(1, 0));
  CHECK(e.estimate == Approx(0.105).epsilon(1e-12));
  CHECK(*e.lower_bound == Approx(0.01).epsilon(1e-12));
  CHECK(*e.upper_bound == Approx(0.19).epsilon(1e-12));
  CHECK(full_fits->load() == 100);
}

TEST_CASE("estimators are invariant to relabelling the groups", "[resampling][property]") {
  oracle::Gen g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = two_sample(g, 2 * g.integer(5, 30), g.uniform(-3, 3));
    const Eigen::VectorXd flipped = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.n())) - d.column("x");
    const auto r = d.with_column("x", flipped);
    ResamplingConfig cfg;
    cfg.group_column = "x";
    cfg.repeats = 5;
    const RngStream s(static_cast<std::uint64_t>(trial), 0);
    const auto null = ModelSpec::ols({});
    const auto full = ModelSpec::ols({"x"});
    const auto loss = LossFunction::squared_error();
    REQUIRE(split_sample_pip(d, null, full, default_fitter(), loss, cfg, s).estimate ==
            split_sample_pip(r, null, full, default_fitter(), loss, cfg, s).estimate);
    REQUIRE(kfold_pip(d, null, full, default_fitter(), loss, cfg, s).estimate ==
            kfold_pip(r, null, full, default_fitter(), loss, cfg, s).estimate);
    const auto a = repeated_kfold_pip(d, null, full, default_fitter(), loss, cfg, s);
    const auto b = repeated_kfold_pip(r, null, full, default_fitter(), loss, cfg, s);
    REQUIRE(a.estimate == b.estimate);
    REQUIRE(*a.lower_bound == *b.lower_bound);
    REQUIRE(*a.upper_bound == *b.upper_bound);
  }
}

TEST_CASE("estimates are bounded, ordered and seed-deterministic", "[resampling][property]") {
  oracle::Gen g(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = two_sample(g, 2 * g.integer(5, 40), g.uniform(-2, 2));
    ResamplingConfig cfg;
    cfg.group_column = "x";
    cfg.repeats = g.integer(1, 12);
    cfg.alpha = g.uniform(0.01, 0.4);
    const RngStream s(99, static_cast<std::uint64_t>(trial));
    const auto null = ModelSpec::ols({});
    const auto full = ModelSpec::ols({"x"});
    const auto loss = LossFunction::squared_error();
    cfg.threads = 1;
    const auto a = repeated_kfold_pip(d, null, full, default_fitter(), loss, cfg, s);
    cfg.threads = 4;
    const auto b = repeated_kfold_pip(d, null, full, default_fitter(), loss, cfg, s);
    REQUIRE(a.estimate == b.estimate);
    REQUIRE(*a.lower_bound == *b.lower_bound);
    REQUIRE(*a.upper_bound == *b.upper_bound);
    REQUIRE(a.meta == b.meta);
    REQUIRE(*a.lower_bound <= a.estimate);
    REQUIRE(a.estimate <= *a.upper_bound);
    REQUIRE(*a.lower_bound >= 0.0);
    REQUIRE(*a.upper_bound <= 1.0);
    REQUIRE_NOTHROW(a.validate());
    const auto sp = split_sample_pip(d, null, full, default_fitter(), loss, cfg, s);
    REQUIRE(sp.estimate >= 0.0);
    REQUIRE(sp.estimate <= 1.0);
  }
}

TEST_CASE("repeated 5-fold converges to the theoretical PIP", "[resampling][statistical]") {
  // beta1 = -4, sigma = 1, n = 400: the estimate must be within 0.03 of
  // Phi(1) in at least 95% of 200 seeded runs.
  const double target = pip_theoretical_two_sample({0.0, -4.0, 1.0}).estimate;
  int hits = 0;
  const int runs = 200;
  for (int run = 0; run < runs; ++run) {
    RngStream data_rng(777, static_cast<std::uint64_t>(run));
    std::vector<double> x, y;
    for (int i = 0; i < 400; ++i) {
      const double xi = i < 200 ? 0.0 : 1.0;
      x.push_back(xi);
      y.push_back(-4.0 * xi + data_rng.next_normal());
    }
    const auto d = make_xy(x, y);
    ResamplingConfig cfg;
    cfg.group_column = "x";
    cfg.threads = 0;
    const auto e = repeated_kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                                      LossFunction::squared_error(), cfg, data_rng.substream(1));
    hits += std::abs(e.estimate - target) <= 0.03;
  }
  CHECK(hits >= 190);
}

TEST_CASE("fit failures identify the fold or split", "[resampling][errors]") {
  // Without stratification, a fold whose training rows all share one group
  // makes the full OLS design singular.
  const auto d = make_xy({0, 0, 0, 1, 1, 1}, {1, 2, 3, 7, 8, 9});
  FoldPlan plan;
  plan.k = 2;
  plan.assignments = {0, 0, 0, 1, 1, 1};
  CHECK_THROWS_MATCHES(kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                                 LossFunction::squared_error(), plan),
                       EstimationFailedError, Catch::Matchers::MessageMatches(ContainsSubstring("fold 0:")));

  const Fitter broken = [](const Dataset&, const ModelSpec&) -> std::shared_ptr<const FittedModel> {
    throw std::runtime_error("boom");
  };
  ResamplingConfig cfg;
  CHECK_THROWS_MATCHES(split_sample_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), broken,
                                        LossFunction::squared_error(), cfg, RngStream(1, 1)),
                       EstimationFailedError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("split: ") && ContainsSubstring("boom")));
  cfg.repeats = 3;
  CHECK_THROWS_AS(repeated_kfold_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), broken,
                                     LossFunction::squared_error(), cfg, RngStream(1, 1)),
                  EstimationFailedError);
}

TEST_CASE("resampling config validation", "[resampling]") {
  ResamplingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.repeats = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.split_ratio = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("custom losses flow through the estimators", "[resampling]") {
  const auto d = make_xy({0, 2, 1, 3}, {1, 3, 0, 5});
  const std::vector<std::size_t> train{0, 1};
  const std::vector<std::size_t> test{2, 3};
  const auto abs_loss = LossFunction::custom("abs", [](double p, double o) { return std::abs(p - o); });
  const auto e = holdout_pip(d, ModelSpec::ols({}), ModelSpec::ols({"x"}), two_point_fitter, abs_loss, train, test);
  CHECK(e.estimate == 0.5);
  CHECK(e.meta.at("delta_mse") == Approx(-1.0).epsilon(1e-14));  // (0 + (1 - 3)) / 2
}
