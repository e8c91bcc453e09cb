#ifndef PIPKIT_RESAMPLING_HPP
#define PIPKIT_RESAMPLING_HPP

#include "pipkit/core.hpp"
#include "pipkit/models.hpp"
#include "pipkit/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pipkit {

/// Fold membership for k-fold cross-validation.
/// Invariant: every fold is non-empty and fold sizes differ by at most one.
struct FoldPlan {
  std::vector<int> assignments;  ///< length n, values in [0, k)
  int k = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Uniform random permutation of 0..n-1 dealt round-robin into k folds.
/// Throws std::invalid_argument unless 2 <= k <= n.
FoldPlan make_folds(std::size_t n, int k, RngStream& rng);

/// As make_folds, but each group's rows are permuted separately (groups in
/// order of first appearance, one permutation each from `rng`) and the
/// concatenation is dealt round-robin, so every fold mixes the groups as
/// evenly as the counts allow.
FoldPlan make_stratified_folds(std::span<const double> groups, int k, RngStream& rng);

struct ResamplingConfig {
  int k = 5;
  int repeats = 10;
  double alpha = 0.05;
  double split_ratio = 0.5;
  TiePolicy tie_policy = TiePolicy::Strict;
  std::uint64_t seed = 20220101;
  /// Binary column to stratify folds and splits on, used only when the full
  /// model includes it as a covariate.
  std::optional<std::string> group_column;
  /// Workers for the repeats of repeated_kfold_pip; 0 selects the hardware count.
  unsigned threads = 1;

  void validate() const;
};

/// Fits both specs on `train` rows and averages the improvement indicator
/// over `test` rows. Throws EstimationFailedError on any fit or prediction error.
PipEstimate holdout_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                        const Fitter& fitter, const LossFunction& loss,
                        std::span<const std::size_t> train, std::span<const std::size_t> test,
                        TiePolicy ties = TiePolicy::Strict);

/// Training set = first floor(n * split_ratio) entries of a seeded permutation
/// (per group when stratified). meta: n_train, n_test, delta_mse.
PipEstimate split_sample_pip(const Dataset& data, const ModelSpec& null_spec,
                             const ModelSpec& full_spec, const Fitter& fitter,
                             const LossFunction& loss, const ResamplingConfig& cfg,
                             const RngStream& rng);

/// (1/k) * sum over folds of the fold-mean indicator. meta: k, delta_mse.
/// Fold failures are reported as EstimationFailedError("fold j: ...").
PipEstimate kfold_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                      const Fitter& fitter, const LossFunction& loss, const FoldPlan& plan,
                      TiePolicy ties = TiePolicy::Strict);

/// k-fold with folds drawn from `rng` (stratified when configured).
PipEstimate kfold_pip(const Dataset& data, const ModelSpec& null_spec, const ModelSpec& full_spec,
                      const Fitter& fitter, const LossFunction& loss, const ResamplingConfig& cfg,
                      const RngStream& rng);

/// Element of rank max(1, ceil(q * M)) in the ascending sort of `values`.
double nearest_rank_quantile(std::vector<double> values, double q);

/// Mean of cfg.repeats k-fold estimates; repeat r draws its folds from
/// rng.substream(r). Bounds are the alpha and 1 - alpha nearest-rank
/// quantiles of the repeat estimates, clamped so lower <= estimate <= upper.
/// meta: k, repeats, delta_mse.
PipEstimate repeated_kfold_pip(const Dataset& data, const ModelSpec& null_spec,
                               const ModelSpec& full_spec, const Fitter& fitter,
                               const LossFunction& loss, const ResamplingConfig& cfg,
                               const RngStream& rng);

}  // namespace pipkit

#endif  // PIPKIT_RESAMPLING_HPP
