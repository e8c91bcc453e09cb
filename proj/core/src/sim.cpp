#include "pipkit/sim.hpp"

#include "pipkit/dists.hpp"
#include "pipkit/parallel.hpp"
#include "pipkit/relations.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace pipkit {

void TwoSampleScenario::validate() const {
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("two-sample scenario: n must be even and >= 4");
  params().validate();
}

void NonlinearScenario::validate() const {
  if (n < 2) throw std::invalid_argument("nonlinear scenario: n must be >= 2");
  if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) {
    throw std::invalid_argument("nonlinear scenario: noise_sd must be positive");
  }
}

Dataset gen_two_sample(const TwoSampleScenario& s, RngStream& rng) {
  s.validate();
  Eigen::VectorXd y(static_cast<Eigen::Index>(s.n));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(s.n), 1);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double g = i < s.n / 2 ? 0.0 : 1.0;
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = g;
    y(r) = s.beta0 + s.beta1 * g + s.sigma * rng.next_normal();
  }
  return Dataset(std::move(y), std::move(x), {"x"});
}

Dataset gen_linear_uniform(std::size_t n, double beta0, double beta1, double sigma, double a, double b,
                           RngStream& rng) {
  UniformCovariateParams{beta0, beta1, sigma, a, b}.validate();
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    x(i, 0) = sample_uniform(a, b, rng);
    y(i) = beta0 + beta1 * x(i, 0) + sigma * rng.next_normal();
  }
  return Dataset(std::move(y), std::move(x), {"x"});
}

namespace {

double draw_nonlinear_row(RngStream& rng, std::span<double> x, double noise_sd) {
  x[0] = std::round(sample_uniform(0.0, 6.0, rng));
  x[1] = std::round(rng.next_normal());
  x[2] = static_cast<double>(sample_bernoulli(0.5, rng));
  x[3] = std::round(10.0 * sample_uniform(0.0, 1.0, rng)) / 10.0;
  x[4] = std::round(10.0 * sample_uniform(1.0, 2.0, rng)) / 10.0;
  const double mean = std::pow(std::abs(4.0 * x[0]), 3.0 * x[3]) + 5.0 * x[1] + std::pow(2.0 * x[2], x[4]);
  return mean + noise_sd * rng.next_normal();
}

}  // namespace

Dataset gen_nonlinear(const NonlinearScenario& s, RngStream& rng) {
  s.validate();
  const auto n = static_cast<Eigen::Index>(s.n);
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 5);
  std::array<double, 5> row{};
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = draw_nonlinear_row(rng, row, s.noise_sd);
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
  }
  return Dataset(std::move(y), std::move(x), {"x1", "x2", "x3", "x4", "x5"});
}

NonlinearProcess::NonlinearProcess(double noise_sd) : noise_sd_(noise_sd) {
  if (!(noise_sd > 0.0)) throw std::invalid_argument("NonlinearProcess: noise_sd must be positive");
}

double NonlinearProcess::draw(RngStream& rng, std::span<double> x) const {
  return draw_nonlinear_row(rng, x, noise_sd_);
}

// ---------------------------------------------------------------------------
// Estimator tags
// ---------------------------------------------------------------------------

std::string_view to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::C1: return "c1";
    case Estimator::C2: return "c2";
    case Estimator::Exp: return "exp";
    case Estimator::LOO: return "loo";
    case Estimator::CV5: return "cv5";
    case Estimator::RepCV5: return "repcv5";
    case Estimator::SS: return "ss";
    case Estimator::Cond: return "cond";
  }
  return "?";
}

const std::vector<Estimator>& all_estimators() {
  static const std::vector<Estimator> all{Estimator::C1,  Estimator::C2,     Estimator::Exp,
                                          Estimator::LOO, Estimator::CV5,    Estimator::RepCV5,
                                          Estimator::SS,  Estimator::Cond};
  return all;
}

Estimator parse_estimator(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto e : all_estimators()) {
    if (to_string(e) == lower) return e;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

void StudyOptions::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  if (n_t < 1) throw std::invalid_argument("n_t must be >= 1");
  resampling.validate();
  gbm.validate();
}

double DecisionRow::rate() const {
  return runs == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(runs);
}

const DecisionRow& DecisionTable::row(std::string_view rule) const {
  for (const auto& r : rows) {
    if (r.rule == rule) return r;
  }
  throw std::out_of_range("decision table has no rule '" + std::string(rule) + "'");
}

bool DecisionTable::has_row(std::string_view rule) const {
  return std::any_of(rows.begin(), rows.end(), [&](const DecisionRow& r) { return r.rule == rule; });
}

// ---------------------------------------------------------------------------
// Study runners
// ---------------------------------------------------------------------------

namespace {

std::string rule_name(const char* base, Estimator e) {
  return std::string(base) + "[" + std::string(to_string(e)) + "]";
}

bool has_lower_bound(Estimator e) { return e == Estimator::RepCV5; }

bool has_delta_mse(Estimator e) {
  return e == Estimator::LOO || e == Estimator::CV5 || e == Estimator::RepCV5 || e == Estimator::SS;
}

std::vector<std::string> decision_rules(const std::vector<Estimator>& estimators, bool with_p) {
  std::vector<std::string> rules;
  if (with_p) rules.emplace_back("p<0.05");
  for (auto e : estimators) rules.push_back(rule_name("PIP>0.5", e));
  for (auto e : estimators) {
    if (has_lower_bound(e)) rules.push_back(rule_name("PIP_LB>0.5", e));
  }
  for (auto e : estimators) {
    if (has_delta_mse(e)) rules.push_back(rule_name("dMSE<0", e));
  }
  return rules;
}

// Preferences of one run, in decision_rules order.
std::vector<bool> run_preferences(const std::vector<EstimateRecord>& records,
                                  const std::vector<Estimator>& estimators, std::optional<double> p_value) {
  std::vector<bool> prefers_full;
  if (p_value) prefers_full.push_back(*p_value < 0.05);
  for (const auto& rec : records) prefers_full.push_back(rec.estimate > 0.5);
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    if (has_lower_bound(estimators[i])) prefers_full.push_back(records[i].lower.value_or(0.0) > 0.5);
  }
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    if (has_delta_mse(estimators[i])) prefers_full.push_back(records[i].delta_mse.value_or(0.0) < 0.0);
  }
  return prefers_full;
}

struct RunOutput {
  std::vector<EstimateRecord> records;
  std::vector<bool> prefers_full;
};

StudyResult aggregate(std::string scenario, std::size_t n, std::optional<double> beta1,
                      std::vector<std::string> rules, bool full_is_better, std::vector<RunOutput>& runs) {
  StudyResult result;
  result.table.scenario = std::move(scenario);
  result.table.n = n;
  result.table.beta1 = beta1;
  for (auto& rule : rules) result.table.rows.push_back({std::move(rule), 0, runs.size()});
  for (auto& run : runs) {
    for (std::size_t j = 0; j < run.prefers_full.size(); ++j) {
      if (run.prefers_full[j] == full_is_better) ++result.table.rows[j].correct;
    }
    for (auto& rec : run.records) result.records.push_back(std::move(rec));
  }
  return result;
}

ResamplingConfig with_k(ResamplingConfig cfg, int k) {
  cfg.k = k;
  cfg.threads = 1;
  return cfg;
}

EstimateRecord make_record(const std::string& scenario, std::size_t n, std::optional<double> beta1,
                           Estimator e, const PipEstimate& est, std::optional<double> p_value,
                           std::uint64_t seed) {
  EstimateRecord rec;
  rec.scenario = scenario;
  rec.n = n;
  rec.beta1 = beta1;
  rec.estimator = std::string(to_string(e));
  rec.estimate = est.estimate;
  rec.lower = est.lower_bound;
  rec.upper = est.upper_bound;
  rec.p_value = p_value;
  if (auto it = est.meta.find("delta_mse"); it != est.meta.end() && has_delta_mse(e)) rec.delta_mse = it->second;
  rec.seed = seed;
  return rec;
}

PipEstimate resampling_estimate(Estimator e, const Dataset& data, const ModelSpec& null_spec,
                                const ModelSpec& full_spec, const ResamplingConfig& base,
                                const RngStream& rng) {
  const auto fitter = default_fitter();
  const auto loss = LossFunction::squared_error();
  switch (e) {
    case Estimator::LOO:
      return kfold_pip(data, null_spec, full_spec, fitter, loss, with_k(base, static_cast<int>(data.n())), rng);
    case Estimator::CV5:
      return kfold_pip(data, null_spec, full_spec, fitter, loss, with_k(base, 5), rng);
    case Estimator::RepCV5:
      return repeated_kfold_pip(data, null_spec, full_spec, fitter, loss, with_k(base, 5), rng);
    case Estimator::SS:
      return split_sample_pip(data, null_spec, full_spec, fitter, loss, with_k(base, 5), rng);
    default:
      throw std::logic_error("not a resampling estimator");
  }
}

template <class Body>
std::vector<RunOutput> run_all(std::size_t runs, unsigned threads, Body&& body) {
  std::vector<RunOutput> out(runs);
  parallel_for(runs, resolve_threads(threads), [&](std::size_t r) {
    try {
      out[r] = body(r);
    } catch (const std::exception& e) {
      throw EstimationFailedError("run " + std::to_string(r) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace

StudyResult run_two_sample_study(const TwoSampleScenario& s, const std::vector<Estimator>& estimators,
                                 const StudyOptions& options) {
  s.validate();
  options.validate();
  if (estimators.empty()) throw std::invalid_argument("run_two_sample_study: no estimators selected");
  ResamplingConfig base = options.resampling;
  base.group_column = "x";
  const ModelSpec null_spec = ModelSpec::ols({});
  const ModelSpec full_spec = ModelSpec::ols({"x"});
  const TwoSampleProcess truth(s.params());

  auto runs = run_all(options.runs, options.threads, [&](std::size_t r) {
    const RngStream run_rng(options.master_seed, r);
    const std::uint64_t seed = derive_seed(options.master_seed, r);
    RngStream data_rng = run_rng.substream(0);
    const Dataset data = gen_two_sample(s, data_rng);
    const OLSFit fit0 = fit_ols(data, {});
    const OLSFit fit1 = fit_ols(data, {"x"});
    const double p = pvalue_two_sample(data, "x").p_value;

    RunOutput run;
    for (auto e : estimators) {
      const RngStream est_rng = run_rng.substream(1 + static_cast<std::uint64_t>(e));
      PipEstimate est;
      switch (e) {
        case Estimator::C1: est = pip_c1(fit1); break;
        case Estimator::C2: est = pip_c2(data, fit0, fit1); break;
        case Estimator::Exp: {
          MonteCarloOptions mc;
          mc.n_mc = options.n_mc;
          est = pip_expected_two_sample_mc(fit1.coefficients()(1), fit1.residual_sd(), s.n, mc, est_rng);
          break;
        }
        case Estimator::Cond:
          est = pip_conditional_empirical(fit0, fit1, truth, options.n_t, est_rng);
          break;
        default:
          est = resampling_estimate(e, data, null_spec, full_spec, base, est_rng);
      }
      run.records.push_back(make_record(s.name, s.n, s.beta1, e, est, p, seed));
    }
    run.prefers_full = run_preferences(run.records, estimators, p);
    return run;
  });
  return aggregate(s.name, s.n, s.beta1, decision_rules(estimators, true), s.beta1 != 0.0, runs);
}

StudyResult run_gbm_study(const NonlinearScenario& s, const StudyOptions& options) {
  s.validate();
  options.validate();
  ResamplingConfig base = options.resampling;
  base.group_column.reset();
  const ModelSpec null_spec = ModelSpec::gbm_model({"x1", "x2", "x3"}, options.gbm);
  const ModelSpec full_spec = ModelSpec::gbm_model({"x1", "x2", "x3", "x4", "x5"}, options.gbm);
  const std::vector<Estimator> estimators{Estimator::SS, Estimator::CV5, Estimator::RepCV5};

  auto runs = run_all(options.runs, options.threads, [&](std::size_t r) {
    const RngStream run_rng(options.master_seed, r);
    const std::uint64_t seed = derive_seed(options.master_seed, r);
    RngStream data_rng = run_rng.substream(0);
    const Dataset data = gen_nonlinear(s, data_rng);
    RunOutput run;
    for (auto e : estimators) {
      const RngStream est_rng = run_rng.substream(1 + static_cast<std::uint64_t>(e));
      const PipEstimate est = resampling_estimate(e, data, null_spec, full_spec, base, est_rng);
      run.records.push_back(make_record(s.name, s.n, std::nullopt, e, est, std::nullopt, seed));
    }
    run.prefers_full = run_preferences(run.records, estimators, std::nullopt);
    return run;
  });
  return aggregate(s.name, s.n, std::nullopt, decision_rules(estimators, false), true, runs);
}

// ---------------------------------------------------------------------------
// Replication
// ---------------------------------------------------------------------------

void ReplicationStudySpec::validate() const {
  if (name.empty()) throw std::invalid_argument("replication study: name must be non-empty");
  if (kind == OutcomeKind::Gaussian) {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument(name + ": Gaussian groups need at least 2 rows");
    if (!(sd1 > 0.0) || !(sd2 > 0.0) || !std::isfinite(sd1) || !std::isfinite(sd2)) {
      throw std::invalid_argument(name + ": standard deviations must be positive");
    }
    if (!std::isfinite(mean1) || !std::isfinite(mean2)) throw std::invalid_argument(name + ": means must be finite");
  } else {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument(name + ": binomial groups need at least 1 row");
    if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0)) {
      throw std::invalid_argument(name + ": proportions must lie in [0, 1]");
    }
  }
}

namespace {

void fill_gaussian_group(Eigen::VectorXd& y, Eigen::Index offset, std::size_t count, double mean, double sd,
                         RngStream& rng) {
  const auto m = static_cast<Eigen::Index>(count);
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.next_normal();
  const double zbar = z.mean();
  const double zsd = std::sqrt((z.array() - zbar).square().sum() / static_cast<double>(m - 1));
  if (!(zsd > 0.0)) throw std::runtime_error("moment matching failed: degenerate normal draw");
  for (Eigen::Index i = 0; i < m; ++i) y(offset + i) = mean + sd * (z(i) - zbar) / zsd;
}

long exact_count(std::size_t n, double p) {
  return static_cast<long>(std::llround(static_cast<double>(n) * p));
}

}  // namespace

Dataset gen_replication_data(const ReplicationStudySpec& spec, RngStream& rng) {
  spec.validate();
  const auto n1 = static_cast<Eigen::Index>(spec.n1);
  const auto n = n1 + static_cast<Eigen::Index>(spec.n2);
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  x.topRows(n1).setZero();
  x.bottomRows(n - n1).setOnes();
  if (spec.kind == OutcomeKind::Gaussian) {
    fill_gaussian_group(y, 0, spec.n1, spec.mean1, spec.sd1, rng);
    fill_gaussian_group(y, n1, spec.n2, spec.mean2, spec.sd2, rng);
  } else {
    const long ones1 = exact_count(spec.n1, spec.p1);
    const long ones2 = exact_count(spec.n2, spec.p2);
    for (Eigen::Index i = 0; i < n1; ++i) y(i) = i < ones1 ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < n - n1; ++i) y(n1 + i) = i < ones2 ? 1.0 : 0.0;
  }
  return Dataset(std::move(y), std::move(x), {"x"});
}

std::vector<ReplicationResult> run_replication(const std::vector<ReplicationStudySpec>& studies,
                                               const ResamplingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  for (const auto& spec : studies) spec.validate();
  std::vector<ReplicationResult> out;
  out.reserve(studies.size());
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const auto& spec = studies[i];
    const RngStream rng(seed, i);
    RngStream data_rng = rng.substream(0);
    const Dataset data = gen_replication_data(spec, data_rng);

    ReplicationResult res;
    res.study = spec.name;
    res.kind = spec.kind;
    ResamplingConfig local = cfg;
    local.group_column = "x";
    if (spec.kind == OutcomeKind::Gaussian) {
      res.p_value = pvalue_two_sample(data, "x").p_value;
    } else {
      res.p_value = pvalue_two_proportion(exact_count(spec.n1, spec.p1), static_cast<long>(spec.n1),
                                          exact_count(spec.n2, spec.p2), static_cast<long>(spec.n2));
      local.tie_policy = TiePolicy::HalfCredit;
    }
    try {
      res.pip = repeated_kfold_pip(data, ModelSpec::ols({}), ModelSpec::ols({"x"}), default_fitter(),
                                   LossFunction::squared_error(), local, rng.substream(1));
    } catch (const std::exception& e) {
      throw EstimationFailedError(spec.name + ": " + e.what());
    }
    out.push_back(std::move(res));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

void emit_results(const std::vector<EstimateRecord>& records, std::ostream& out) {
  out << "scenario,n,beta1,estimator,estimate,lower,upper,p_value,delta_mse,seed\n";
  for (const auto& r : records) {
    out << csv_field(r.scenario) << ',' << r.n << ',' << format_optional(r.beta1) << ','
        << csv_field(r.estimator) << ',' << format_number(r.estimate) << ',' << format_optional(r.lower) << ','
        << format_optional(r.upper) << ',' << format_optional(r.p_value) << ','
        << format_optional(r.delta_mse) << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("emit_results: write failed");
}

std::uint64_t scenario_seed(std::uint64_t config_seed, std::size_t scenario_index) {
  return derive_seed(config_seed, scenario_index);
}

}  // namespace pipkit
