#include "pipkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pipkit {

void GBMHyperparams::validate() const {
  if (n_trees < 0) throw std::invalid_argument("GBM: n_trees must be >= 0");
  if (interaction_depth < 1) throw std::invalid_argument("GBM: interaction_depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw std::invalid_argument("GBM: shrinkage must lie in (0,1]");
  if (min_obs_per_node < 1) throw std::invalid_argument("GBM: min_obs_per_node must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].column >= 0) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.column)] <= node.threshold ? node.left
                                                                                           : node.right);
  }
  return nodes[i].value;
}

int RegressionTree::depth() const {
  int d = 0;
  for (const auto& node : nodes) d = std::max(d, node.depth);
  return d;
}

GBMFit::GBMFit(std::vector<RegressionTree> trees, double initial_prediction, GBMHyperparams hp,
               std::vector<std::string> covariate_names)
    : trees_(std::move(trees)),
      initial_prediction_(initial_prediction),
      hp_(hp),
      covariate_names_(std::move(covariate_names)) {}

double GBMFit::predict(std::span<const double> x) const {
  if (x.size() != covariate_names_.size()) {
    throw std::invalid_argument("GBMFit::predict: expected " +
                                std::to_string(covariate_names_.size()) + " covariates, got " +
                                std::to_string(x.size()));
  }
  double acc = initial_prediction_;
  for (const auto& tree : trees_) acc += hp_.shrinkage * tree.predict(x);
  return acc;
}

GBMFit GBMFit::truncated(std::size_t n_trees) const {
  const auto take = std::min(n_trees, trees_.size());
  std::vector<RegressionTree> head(trees_.begin(), trees_.begin() + static_cast<std::ptrdiff_t>(take));
  GBMHyperparams hp = hp_;
  hp.n_trees = static_cast<int>(take);
  return GBMFit(std::move(head), initial_prediction_, hp, covariate_names_);
}

namespace {

struct SplitCandidate {
  int column = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns,
              const std::vector<std::vector<std::size_t>>& sorted_rows, const GBMHyperparams& hp)
      : columns_(columns), sorted_(sorted_rows), hp_(hp) {
    node_of_.resize(columns.empty() ? 0 : columns.front().size());
  }

  RegressionTree build(const std::vector<double>& residual) {
    residual_ = &residual;
    const std::size_t n = residual.size();
    std::fill(node_of_.begin(), node_of_.end(), 0);
    RegressionTree tree;
    tree.nodes.push_back({});
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(tree, 0, all, 0);
    if (tree.nodes.size() == 1) tree.nodes.front().value = 0.0;  // no-op stage
    return tree;
  }

 private:
  void grow(RegressionTree& tree, int node_id, const std::vector<std::size_t>& rows, int depth) {
    const auto& r = *residual_;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (auto i : rows) {
      sum += r[i];
      sum_sq += r[i] * r[i];
    }
    const auto count = rows.size();
    {
      auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
      node.n_obs = count;
      node.depth = depth;
      node.value = sum / static_cast<double>(count);
    }
    const auto min_obs = static_cast<std::size_t>(hp_.min_obs_per_node);
    if (depth >= hp_.interaction_depth || count < 2 * min_obs || columns_.empty()) return;

    const SplitCandidate best = find_split(node_id, count, sum, sum_sq);
    if (best.column < 0) return;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    const auto& xcol = columns_[static_cast<std::size_t>(best.column)];
    for (auto i : rows) {
      (xcol[i] <= best.threshold ? left_rows : right_rows).push_back(i);
    }
    const int left_id = static_cast<int>(tree.nodes.size());
    const int right_id = left_id + 1;
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    {
      auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
      node.column = best.column;
      node.threshold = best.threshold;
      node.left = left_id;
      node.right = right_id;
    }
    for (auto i : left_rows) node_of_[i] = left_id;
    for (auto i : right_rows) node_of_[i] = right_id;
    grow(tree, left_id, left_rows, depth + 1);
    grow(tree, right_id, right_rows, depth + 1);
  }

  SplitCandidate find_split(int node_id, std::size_t count, double sum, double sum_sq) const {
    const auto& r = *residual_;
    const auto min_obs = static_cast<std::size_t>(hp_.min_obs_per_node);
    const double parent_score = sum * sum / static_cast<double>(count);
    const double node_sse = std::max(sum_sq - parent_score, 0.0);
    // Gains at or below rounding noise are not splits.
    const double min_gain = 1e-12 * node_sse + 1e-15 * sum_sq;
    SplitCandidate best;
    best.gain = min_gain;

    std::vector<std::size_t> in_node;
    in_node.reserve(count);
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      in_node.clear();
      for (auto i : sorted_[c]) {
        if (node_of_[i] == node_id) in_node.push_back(i);
      }
      const auto& x = columns_[c];
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < in_node.size(); ++k) {
        left_sum += r[in_node[k]];
        const double xl = x[in_node[k]];
        const double xr = x[in_node[k + 1]];
        if (xl == xr) continue;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = in_node.size() - n_left;
        if (n_left < min_obs || n_right < min_obs) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - parent_score;
        if (gain > best.gain) {
          best.column = static_cast<int>(c);
          best.threshold = 0.5 * (xl + xr);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const GBMHyperparams& hp_;
  const std::vector<double>* residual_ = nullptr;
  std::vector<int> node_of_;
};

}  // namespace

GBMFit fit_gbm(const Dataset& data, const std::vector<std::string>& covariates,
               const GBMHyperparams& hp) {
  hp.validate();
  const std::size_t n = data.n();
  if (n < 2 * static_cast<std::size_t>(hp.min_obs_per_node)) {
    throw InsufficientDataError("fit_gbm: need at least 2 * min_obs_per_node rows");
  }

  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::size_t>> sorted;
  columns.reserve(covariates.size());
  sorted.reserve(covariates.size());
  for (const auto& name : covariates) {
    const auto col = data.column(name);
    columns.emplace_back(col.data(), col.data() + col.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& values = columns.back();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    sorted.push_back(std::move(order));
  }

  const auto& y = data.outcomes();
  const double init = y.mean();
  std::vector<double> fitted(n, init);
  std::vector<double> residual(n);
  std::vector<double> x(covariates.size());

  TreeBuilder builder(columns, sorted, hp);
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(hp.n_trees));
  for (int stage = 0; stage < hp.n_trees; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y(static_cast<Eigen::Index>(i)) - fitted[i];
    RegressionTree tree = builder.build(residual);
    if (!tree.is_stump_noop()) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) x[j] = columns[j][i];
        fitted[i] += hp.shrinkage * tree.predict(x);
      }
    }
    trees.push_back(std::move(tree));
  }
  return GBMFit(std::move(trees), init, hp, covariates);
}

ModelSpec ModelSpec::ols(std::vector<std::string> covariates) {
  ModelSpec spec;
  spec.family = ModelFamily::OLS;
  spec.covariates = std::move(covariates);
  return spec;
}

ModelSpec ModelSpec::gbm_model(std::vector<std::string> covariates, GBMHyperparams hp) {
  ModelSpec spec;
  spec.family = ModelFamily::GBM;
  spec.covariates = std::move(covariates);
  spec.gbm = hp;
  return spec;
}

ModelFamily parse_model_family(std::string_view name) {
  if (name == "ols") return ModelFamily::OLS;
  if (name == "gbm") return ModelFamily::GBM;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

std::string_view to_string(ModelFamily family) noexcept {
  return family == ModelFamily::GBM ? "gbm" : "ols";
}

std::shared_ptr<const FittedModel> fit_model(const Dataset& data, const ModelSpec& spec) {
  if (spec.family == ModelFamily::GBM) {
    return std::make_shared<GBMFit>(fit_gbm(data, spec.covariates, spec.gbm));
  }
  return std::make_shared<OLSFit>(fit_ols(data, spec.covariates));
}

Fitter default_fitter() { return &fit_model; }

}  // namespace pipkit
