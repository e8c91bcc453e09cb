#ifndef PIPKIT_SIM_HPP
#define PIPKIT_SIM_HPP

#include "pipkit/core.hpp"
#include "pipkit/models.hpp"
#include "pipkit/plugin.hpp"
#include "pipkit/resampling.hpp"
#include "pipkit/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pipkit {

// ---------------------------------------------------------------------------
// Scenarios and generators
// ---------------------------------------------------------------------------

struct TwoSampleScenario {
  std::string name = "two_sample";
  std::size_t n = 20;  ///< even
  double beta0 = 0.0;
  double beta1 = 0.0;
  double sigma = 1.0;

  void validate() const;
  TwoSampleParams params() const { return {beta0, beta1, sigma}; }
};

struct NonlinearScenario {
  std::string name = "nonlinear";
  std::size_t n = 100;
  double noise_sd = 1.6;

  void validate() const;
};

/// Rows 0..n/2-1 have x = 0, the rest x = 1; y = beta0 + beta1 x + sigma z.
Dataset gen_two_sample(const TwoSampleScenario& s, RngStream& rng);

/// x ~ U[a, b], y = beta0 + beta1 x + sigma z; column "x".
Dataset gen_linear_uniform(std::size_t n, double beta0, double beta1, double sigma, double a, double b,
                           RngStream& rng);

/// y = |4 x1|^(3 x4) + 5 x2 + (2 x3)^x5 + noise_sd z with
/// x1 = round(U[0,6]), x2 = round(N(0,1)), x3 ~ Bernoulli(0.5),
/// x4 = round(U[0,1], 1 decimal), x5 = round(U[1,2], 1 decimal).
/// 0^0 evaluates to 1.
Dataset gen_nonlinear(const NonlinearScenario& s, RngStream& rng);

/// Fresh draws from the gen_nonlinear model; columns x1..x5.
class NonlinearProcess final : public DataGeneratingProcess {
 public:
  explicit NonlinearProcess(double noise_sd);
  const std::vector<std::string>& column_names() const override { return names_; }
  double draw(RngStream& rng, std::span<double> x) const override;

 private:
  double noise_sd_;
  std::vector<std::string> names_{"x1", "x2", "x3", "x4", "x5"};
};

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

enum class Estimator { C1, C2, Exp, LOO, CV5, RepCV5, SS, Cond };

/// "c1", "c2", "exp", "loo", "cv5", "repcv5", "ss", "cond".
std::string_view to_string(Estimator e) noexcept;
Estimator parse_estimator(std::string_view name);
const std::vector<Estimator>& all_estimators();

struct StudyOptions {
  std::size_t runs = 1000;
  std::uint64_t master_seed = 20220101;
  unsigned threads = 1;
  /// k is overridden to 5 for CV5/RepCV5 and to n for LOO.
  ResamplingConfig resampling;
  std::size_t n_mc = 100000;
  std::size_t n_t = 100000;
  GBMHyperparams gbm;

  void validate() const;
};

/// One (run, estimator) result. Optional fields are empty when not
/// applicable to the estimator or study.
struct EstimateRecord {
  std::string scenario;
  std::size_t n = 0;
  std::optional<double> beta1;
  std::string estimator;
  double estimate = 0.5;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> p_value;
  std::optional<double> delta_mse;
  std::uint64_t seed = 0;  ///< derive_seed(master_seed, run)
};

struct DecisionRow {
  std::string rule;
  std::size_t correct = 0;
  std::size_t runs = 0;

  /// Percentage in [0, 100].
  double rate() const;
};

/// Rule names: "p<0.05", "PIP>0.5[e]", "PIP_LB>0.5[e]", "dMSE<0[e]" with e
/// an estimator tag. A tie (estimate exactly 0.5, dMSE exactly 0) prefers
/// the null model.
struct DecisionTable {
  std::string scenario;
  std::size_t n = 0;
  std::optional<double> beta1;
  std::vector<DecisionRow> rows;

  /// Throws std::out_of_range for an unknown rule.
  const DecisionRow& row(std::string_view rule) const;
  bool has_row(std::string_view rule) const;
};

struct StudyResult {
  DecisionTable table;
  std::vector<EstimateRecord> records;  ///< run-major, estimators in request order
};

/// Run r draws its data and estimator streams from RngStream(master_seed, r);
/// results do not depend on options.threads. Estimator failures surface as
/// EstimationFailedError("run r: ...").
StudyResult run_two_sample_study(const TwoSampleScenario& s, const std::vector<Estimator>& estimators,
                                 const StudyOptions& options);

/// GBM null (x1, x2, x3) against full (x1..x5) with SS, CV5 and RepCV5.
StudyResult run_gbm_study(const NonlinearScenario& s, const StudyOptions& options);

// ---------------------------------------------------------------------------
// Replication of published two-group comparisons
// ---------------------------------------------------------------------------

enum class OutcomeKind { Gaussian, Binomial };

struct ReplicationStudySpec {
  std::string name;
  OutcomeKind kind = OutcomeKind::Gaussian;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double mean1 = 0.0, sd1 = 1.0, mean2 = 0.0, sd2 = 1.0;  ///< Gaussian
  double p1 = 0.0, p2 = 0.0;                              ///< Binomial

  void validate() const;
};

/// Group 1 gets x = 0, group 2 x = 1. Gaussian groups are drawn normal and
/// affinely rescaled so their sample mean and SD (n - 1 divisor) equal the
/// targets; binomial groups hold exactly round(n_i p_i) ones.
Dataset gen_replication_data(const ReplicationStudySpec& spec, RngStream& rng);

struct ReplicationResult {
  std::string study;
  OutcomeKind kind = OutcomeKind::Gaussian;
  double p_value = 1.0;
  PipEstimate pip;
};

/// Study i uses RngStream(seed, i). p-values by pooled t-test (Gaussian) or
/// pooled two-proportion z-test (Binomial); PIP by repeated k-fold OLS with
/// squared loss, HalfCredit ties for binomial outcomes.
std::vector<ReplicationResult> run_replication(const std::vector<ReplicationStudySpec>& studies,
                                               const ResamplingConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Header plus one row per record:
/// scenario,n,beta1,estimator,estimate,lower,upper,p_value,delta_mse,seed
void emit_results(const std::vector<EstimateRecord>& records, std::ostream& out);

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StudyKind { TwoSample, Gbm };

struct SimulationConfig {
  StudyKind kind = StudyKind::TwoSample;
  std::vector<TwoSampleScenario> two_sample;
  std::vector<NonlinearScenario> nonlinear;
  std::vector<Estimator> estimators;
  StudyOptions options;  ///< options.master_seed is the config seed
};

/// Scenario i of a config runs with master seed derive_seed(seed, i).
std::uint64_t scenario_seed(std::uint64_t config_seed, std::size_t scenario_index);

struct ReplicationConfig {
  std::vector<ReplicationStudySpec> studies;
  ResamplingConfig resampling;
  std::uint64_t seed = 20220101;
};

/// Throws ConfigError with a field path on malformed input.
SimulationConfig parse_simulation_config(std::istream& in);
ReplicationConfig parse_replication_config(std::istream& in);

/// Decision tables as a JSON array, numbers rounded to `decimals`.
std::string decision_tables_json(const std::vector<DecisionTable>& tables, int decimals = 6);

}  // namespace pipkit

#endif  // PIPKIT_SIM_HPP
