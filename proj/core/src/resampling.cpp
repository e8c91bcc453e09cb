#include "pipkit/resampling.hpp"

#include "pipkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pipkit {

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int a : assignments) ++sizes.at(static_cast<std::size_t>(a));
  return sizes;
}

namespace {

void check_fold_count(std::size_t n, int k) {
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("fold count k = " + std::to_string(k) + " must satisfy 2 <= k <= n = " +
                                std::to_string(n));
  }
}

FoldPlan deal(const std::vector<std::size_t>& order, int k) {
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.assignments[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

// Rows grouped by label, groups ordered by first appearance so that relabelling
// leaves the result unchanged; each group is shuffled with `rng` in turn.
std::vector<std::vector<std::size_t>> permuted_groups(std::span<const double> groups, RngStream& rng) {
  std::map<double, std::size_t> slot;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto [it, fresh] = slot.try_emplace(groups[i], out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(i);
  }
  for (auto& rows : out) shuffle(rows, rng);
  return out;
}

std::optional<std::vector<double>> strata(const Dataset& data, const ModelSpec& full_spec,
                                          const ResamplingConfig& cfg) {
  if (!cfg.group_column) return std::nullopt;
  const auto& covs = full_spec.covariates;
  if (std::find(covs.begin(), covs.end(), *cfg.group_column) == covs.end()) return std::nullopt;
  const Eigen::VectorXd col = data.column(*cfg.group_column);
  return std::vector<double>(col.data(), col.data() + col.size());
}

struct HoldoutScore {
  double indicator_mean = 0.0;
  double delta_loss = 0.0;  // mean full loss - mean null loss
};

HoldoutScore score_holdout(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                           const Fitter& fitter, const LossFunction& loss,
                           std::span<const std::size_t> train, std::span<const std::size_t> test,
                           TiePolicy ties) {
  if (test.empty()) throw EstimationFailedError("empty test set");
  const Dataset train_data = data.subset(train);
  std::shared_ptr<const FittedModel> null_fit;
  std::shared_ptr<const FittedModel> full_fit;
  try {
    null_fit = fitter(train_data, null_spec);
  } catch (const std::exception& e) {
    throw EstimationFailedError(std::string("null model fit failed: ") + e.what());
  }
  try {
    full_fit = fitter(train_data, full_spec);
  } catch (const std::exception& e) {
    throw EstimationFailedError(std::string("full model fit failed: ") + e.what());
  }
  if (!null_fit || !full_fit) throw EstimationFailedError("fitter returned no model");

  std::vector<double> pred0;
  std::vector<double> pred1;
  try {
    pred0 = null_fit->predict_rows(data, test);
    pred1 = full_fit->predict_rows(data, test);
  } catch (const std::exception& e) {
    throw EstimationFailedError(std::string("prediction failed: ") + e.what());
  }
  double hits = 0.0;
  double delta = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double y = data.outcome(test[i]);
    const double l0 = loss(pred0[i], y);
    const double l1 = loss(pred1[i], y);
    hits += improvement_indicator(l1, l0, ties);
    delta += l1 - l0;
  }
  const auto m = static_cast<double>(test.size());
  return {hits / m, delta / m};
}

HoldoutScore score_folds(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                         const Fitter& fitter, const LossFunction& loss, const FoldPlan& plan,
                         TiePolicy ties) {
  if (plan.assignments.size() != data.n()) {
    throw std::invalid_argument("fold plan length does not match the dataset");
  }
  check_fold_count(data.n(), plan.k);
  HoldoutScore total;
  for (int j = 0; j < plan.k; ++j) {
    const auto test = plan.test_rows(j);
    const auto train = plan.train_rows(j);
    HoldoutScore fold;
    try {
      fold = score_holdout(data, null_spec, full_spec, fitter, loss, train, test, ties);
    } catch (const std::exception& e) {
      throw EstimationFailedError("fold " + std::to_string(j) + ": " + e.what());
    }
    total.indicator_mean += fold.indicator_mean;
    total.delta_loss += fold.delta_loss;
  }
  total.indicator_mean /= plan.k;
  total.delta_loss /= plan.k;
  return total;
}

FoldPlan draw_folds(const Dataset& data, const ModelSpec& full_spec, const ResamplingConfig& cfg,
                    RngStream& rng) {
  if (const auto groups = strata(data, full_spec, cfg)) {
    return make_stratified_folds(*groups, cfg.k, rng);
  }
  return make_folds(data.n(), cfg.k, rng);
}

}  // namespace

FoldPlan make_folds(std::size_t n, int k, RngStream& rng) {
  check_fold_count(n, k);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  return deal(order, k);
}

FoldPlan make_stratified_folds(std::span<const double> groups, int k, RngStream& rng) {
  check_fold_count(groups.size(), k);
  std::vector<std::size_t> order;
  order.reserve(groups.size());
  for (const auto& rows : permuted_groups(groups, rng)) order.insert(order.end(), rows.begin(), rows.end());
  return deal(order, k);
}

void ResamplingConfig::validate() const {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw std::invalid_argument("split_ratio must lie in (0, 1)");
  }
}

PipEstimate holdout_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                        const Fitter& fitter, const LossFunction& loss,
                        std::span<const std::size_t> train, std::span<const std::size_t> test,
                        TiePolicy ties) {
  for (auto r : train) {
    if (r >= data.n()) throw std::out_of_range("holdout_pip: training row out of range");
  }
  for (auto r : test) {
    if (r >= data.n()) throw std::out_of_range("holdout_pip: test row out of range");
  }
  const auto score = score_holdout(data, null_spec, full_spec, fitter, loss, train, test, ties);
  PipEstimate out;
  out.method = "holdout";
  out.estimate = score.indicator_mean;
  out.meta["n_train"] = static_cast<double>(train.size());
  out.meta["n_test"] = static_cast<double>(test.size());
  out.meta["delta_mse"] = score.delta_loss;
  return out;
}

PipEstimate split_sample_pip(const Dataset& data, const ModelSpec& null_spec,
                             const ModelSpec& full_spec, const Fitter& fitter,
                             const LossFunction& loss, const ResamplingConfig& cfg,
                             const RngStream& rng) {
  cfg.validate();
  RngStream local = rng;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  auto cut = [&](const std::vector<std::size_t>& order) {
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(order.size()) * cfg.split_ratio));
    train.insert(train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  };
  if (const auto groups = strata(data, full_spec, cfg)) {
    for (const auto& rows : permuted_groups(*groups, local)) cut(rows);
  } else {
    std::vector<std::size_t> order(data.n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, local);
    cut(order);
  }
  if (train.empty() || test.empty()) {
    throw EstimationFailedError("split: split_ratio leaves an empty training or test set");
  }
  PipEstimate out;
  try {
    out = holdout_pip(data, null_spec, full_spec, fitter, loss, train, test, cfg.tie_policy);
  } catch (const EstimationFailedError& e) {
    throw EstimationFailedError(std::string("split: ") + e.what());
  }
  out.method = "split";
  out.seed = rng.master_seed();
  return out;
}

PipEstimate kfold_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                      const Fitter& fitter, const LossFunction& loss, const FoldPlan& plan,
                      TiePolicy ties) {
  const auto score = score_folds(data, null_spec, full_spec, fitter, loss, plan, ties);
  PipEstimate out;
  out.method = "cv";
  out.estimate = score.indicator_mean;
  out.meta["k"] = plan.k;
  out.meta["delta_mse"] = score.delta_loss;
  return out;
}

PipEstimate kfold_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                      const Fitter& fitter, const LossFunction& loss, const ResamplingConfig& cfg,
                      const RngStream& rng) {
  cfg.validate();
  RngStream local = rng;
  const FoldPlan plan = draw_folds(data, full_spec, cfg, local);
  PipEstimate out = kfold_pip(data, null_spec, full_spec, fitter, loss, plan, cfg.tie_policy);
  out.seed = rng.master_seed();
  return out;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("nearest_rank_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("nearest_rank_quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  // The small offset keeps q * M at an integer (0.95 * 20) on that integer.
  auto rank = static_cast<std::size_t>(std::ceil(q * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

PipEstimate repeated_kfold_pip(const Dataset& data, const ModelSpec& null_spec,
                               const ModelSpec& full_spec, const Fitter& fitter,
                               const LossFunction& loss, const ResamplingConfig& cfg,
                               const RngStream& rng) {
  cfg.validate();
  check_fold_count(data.n(), cfg.k);
  const auto m = static_cast<std::size_t>(cfg.repeats);
  std::vector<HoldoutScore> repeats(m);
  parallel_for(m, resolve_threads(cfg.threads), [&](std::size_t r) {
    RngStream local = rng.substream(r);
    const FoldPlan plan = draw_folds(data, full_spec, cfg, local);
    repeats[r] = score_folds(data, null_spec, full_spec, fitter, loss, plan, cfg.tie_policy);
  });

  std::vector<double> estimates(m);
  double sum = 0.0;
  double delta = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    estimates[r] = repeats[r].indicator_mean;
    sum += estimates[r];
    delta += repeats[r].delta_loss;
  }
  PipEstimate out;
  out.method = "repcv";
  out.estimate = sum / static_cast<double>(m);
  out.lower_bound = std::min(nearest_rank_quantile(estimates, cfg.alpha), out.estimate);
  out.upper_bound = std::max(nearest_rank_quantile(estimates, 1.0 - cfg.alpha), out.estimate);
  out.seed = rng.master_seed();
  out.meta["k"] = cfg.k;
  out.meta["repeats"] = cfg.repeats;
  out.meta["alpha"] = cfg.alpha;
  out.meta["delta_mse"] = delta / static_cast<double>(m);
  return out;
}

}  // namespace pipkit
