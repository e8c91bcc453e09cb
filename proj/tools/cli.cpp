#include "cli.hpp"

#include "pipkit/csv.hpp"
#include "pipkit/models.hpp"
#include "pipkit/plugin.hpp"
#include "pipkit/relations.hpp"
#include "pipkit/resampling.hpp"
#include "pipkit/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace pipkit::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// Invalid user input detected after argument parsing.
struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json number(double v) {
  if (!std::isfinite(v)) return json(nullptr);
  const double r = std::round(v * 1e6) / 1e6;
  return json(r == 0.0 ? 0.0 : r);
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json estimate_json(const PipEstimate& e) {
  json meta = json::object();
  for (const auto& [key, value] : e.meta) meta[key] = number(value);
  return {{"method", e.method},
          {"estimate", number(e.estimate)},
          {"lower", optional_number(e.lower_bound)},
          {"upper", optional_number(e.upper_bound)},
          {"seed", e.seed ? json(*e.seed) : json(nullptr)},
          {"meta", std::move(meta)}};
}

std::vector<std::string> split_columns(const std::string& text) {
  std::vector<std::string> cols;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    cols.push_back(item.substr(b, e - b + 1));
  }
  return cols;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string csv;
  std::string outcome = "y";
  std::string null_cols;
  std::string full_cols;
  std::string model = "ols";
  std::string method = "repcv";
  int k = 5;
  int repeats = 10;
  double alpha = 0.05;
  double split_ratio = 0.5;
  std::string ties = "strict";
  std::string group;
  std::size_t n_mc = 100000;
  GBMHyperparams gbm;
};

PipEstimate closed_form_estimate(const EstimateArgs& a, const Dataset& data,
                                 const std::vector<std::string>& null_cols,
                                 const std::vector<std::string>& full_cols, std::uint64_t seed,
                                 unsigned threads) {
  if (a.model != "ols") throw BadInput("method " + a.method + " requires --model ols");
  if (!null_cols.empty() || full_cols.size() != 1) {
    throw BadInput("method " + a.method + " requires an intercept-only null model and one full covariate");
  }
  const std::string& x = full_cols.front();
  const OLSFit fit0 = fit_ols(data, {});
  const OLSFit fit1 = fit_ols(data, {x});
  const bool two_sample = is_binary_column(data, x);
  const Eigen::VectorXd col = data.column(x);

  if (a.method == "c1") {
    if (two_sample) return pip_c1(fit1);
    return pip_plugin_uniform(fit1.coefficients()(1), fit1.residual_sd(), col.mean(), col.minCoeff(),
                              col.maxCoeff());
  }
  if (a.method == "c2") {
    if (!two_sample) throw BadInput("method c2 requires a 0/1 covariate");
    return pip_c2(data, fit0, fit1);
  }
  MonteCarloOptions mc;
  mc.n_mc = a.n_mc;
  mc.threads = threads;
  mc.ties = parse_tie_policy(a.ties);
  const RngStream rng(seed, 0);
  if (two_sample) {
    const auto n1 = static_cast<std::size_t>(col.sum());
    if (2 * n1 != data.n()) throw BadInput("method expected requires a balanced 0/1 design");
    return pip_expected_two_sample_mc(fit1.coefficients()(1), fit1.residual_sd(), data.n(), mc, rng);
  }
  UniformCovariateParams params;
  params.beta0 = fit1.coefficients()(0);
  params.beta1 = fit1.coefficients()(1);
  params.sigma = fit1.residual_sd();
  params.a = col.minCoeff();
  params.b = col.maxCoeff();
  return pip_expected_uniform_mc(params, CoefficientMoments::from_fit(fit1, col.mean()), mc, rng);
}

int cmd_estimate(const EstimateArgs& a, std::uint64_t seed, unsigned threads, std::ostream& out) {
  static const std::vector<std::string> methods{"c1", "c2", "expected", "split", "cv", "repcv"};
  if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
    throw BadInput("unknown method '" + a.method + "'");
  }
  const auto null_cols = split_columns(a.null_cols);
  const auto full_cols = split_columns(a.full_cols);
  if (full_cols.empty()) throw BadInput("--full must name at least one covariate");
  std::vector<std::string> needed = full_cols;
  for (const auto& c : null_cols) {
    if (std::find(needed.begin(), needed.end(), c) == needed.end()) needed.push_back(c);
  }
  if (!a.group.empty() && std::find(needed.begin(), needed.end(), a.group) == needed.end()) {
    needed.push_back(a.group);
  }
  ModelSpec null_spec;
  ModelSpec full_spec;
  try {
    const ModelFamily family = parse_model_family(a.model);
    null_spec = family == ModelFamily::GBM ? ModelSpec::gbm_model(null_cols, a.gbm) : ModelSpec::ols(null_cols);
    full_spec = family == ModelFamily::GBM ? ModelSpec::gbm_model(full_cols, a.gbm) : ModelSpec::ols(full_cols);
    a.gbm.validate();
  } catch (const std::invalid_argument& e) {
    throw BadInput(e.what());
  }
  ResamplingConfig cfg;
  cfg.k = a.k;
  cfg.repeats = a.repeats;
  cfg.alpha = a.alpha;
  cfg.split_ratio = a.split_ratio;
  cfg.seed = seed;
  cfg.threads = threads;
  try {
    cfg.tie_policy = parse_tie_policy(a.ties);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw BadInput(e.what());
  }
  if (!a.group.empty()) cfg.group_column = a.group;

  const Dataset data = read_csv_file(a.csv, a.outcome, needed);
  if (!a.group.empty() && !is_binary_column(data, a.group)) {
    throw BadInput("--group column '" + a.group + "' is not 0/1");
  }
  if ((a.method == "cv" || a.method == "repcv") && static_cast<std::size_t>(a.k) > data.n()) {
    throw BadInput("--k exceeds the number of rows");
  }

  PipEstimate est;
  if (a.method == "c1" || a.method == "c2" || a.method == "expected") {
    est = closed_form_estimate(a, data, null_cols, full_cols, seed, threads);
  } else {
    const RngStream rng(seed, 0);
    const auto fitter = default_fitter();
    const auto loss = LossFunction::squared_error();
    if (a.method == "split") {
      est = split_sample_pip(data, null_spec, full_spec, fitter, loss, cfg, rng);
    } else if (a.method == "cv") {
      est = kfold_pip(data, null_spec, full_spec, fitter, loss, cfg, rng);
    } else {
      est = repeated_kfold_pip(data, null_spec, full_spec, fitter, loss, cfg, rng);
    }
  }
  out << estimate_json(est).dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// relate
// ---------------------------------------------------------------------------

struct RelateArgs {
  int n = 0;
  std::optional<double> p;
  std::optional<double> pip;
  std::optional<double> sigma;
};

int cmd_relate(const RelateArgs& a, std::ostream& out) {
  if (a.p.has_value() == a.pip.has_value()) throw BadInput("give exactly one of --p and --pip");
  double pip = 0.5;
  double p = 1.0;
  try {
    if (a.p) {
      p = *a.p;
      pip = pip_from_pvalue(p, a.n);
    } else {
      pip = *a.pip;
      p = pvalue_from_pip(pip, a.n);
    }
    json doc = {{"n", a.n},
                {"pip", number(pip)},
                {"p_value", number(p)},
                {"scaled_log_p_limit", number(asymptotic_scaled_log_p(pip))},
                {"overlap", number(overlap_from_pip(pip, a.n))}};
    if (a.sigma) doc["delta_mse"] = number(delta_mse_from_pip(pip, *a.sigma));
    out << doc.dump(2) << '\n';
  } catch (const std::domain_error& e) {
    throw BadInput(e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate / replicate
// ---------------------------------------------------------------------------

template <class Parser>
auto load_config(const std::string& path, Parser&& parse) {
  std::ifstream in(path);
  if (!in) throw BadInput("cannot open config '" + path + "'");
  try {
    return parse(in);
  } catch (const ConfigError& e) {
    throw BadInput(path + ": " + e.what());
  }
}

void print_summary(const std::vector<DecisionTable>& tables, std::ostream& out) {
  std::size_t width = 4;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) width = std::max(width, r.rule.size());
  }
  for (const auto& t : tables) {
    out << t.scenario << "  (n = " << t.n;
    if (t.beta1) out << ", beta1 = " << *t.beta1;
    out << ")\n";
    for (const auto& r : t.rows) {
      char rate[32];
      std::snprintf(rate, sizeof rate, "%7.2f", r.rate());
      out << "  " << std::left << std::setw(static_cast<int>(width)) << r.rule << std::right << "  " << rate
          << "%  (" << r.correct << "/" << r.runs << ")\n";
    }
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> runs, unsigned threads, std::ostream& out) {
  SimulationConfig cfg = load_config(config_path, parse_simulation_config);
  if (seed) cfg.options.master_seed = *seed;
  if (runs) {
    if (*runs == 0) throw BadInput("--runs must be >= 1");
    cfg.options.runs = *runs;
  }
  cfg.options.threads = threads;
  if (out_dir.empty()) throw BadInput("--out is required");
  if (fs::exists(out_dir) && !fs::is_directory(out_dir)) throw BadInput("--out exists and is not a directory");

  std::vector<DecisionTable> tables;
  std::vector<EstimateRecord> records;
  const std::size_t count = cfg.kind == StudyKind::TwoSample ? cfg.two_sample.size() : cfg.nonlinear.size();
  for (std::size_t i = 0; i < count; ++i) {
    StudyOptions opt = cfg.options;
    opt.master_seed = scenario_seed(cfg.options.master_seed, i);
    StudyResult res = cfg.kind == StudyKind::TwoSample
                          ? run_two_sample_study(cfg.two_sample[i], cfg.estimators, opt)
                          : run_gbm_study(cfg.nonlinear[i], opt);
    tables.push_back(std::move(res.table));
    records.insert(records.end(), std::make_move_iterator(res.records.begin()),
                   std::make_move_iterator(res.records.end()));
  }
  std::ostringstream csv;
  emit_results(records, csv);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "results.csv", csv.str());
  write_file(fs::path(out_dir) / "decisions.json", decision_tables_json(tables) + "\n");
  print_summary(tables, out);
  return kExitOk;
}

int cmd_replicate(const std::string& config_path, std::optional<std::uint64_t> seed, unsigned threads,
                  std::ostream& out) {
  ReplicationConfig cfg = load_config(config_path, parse_replication_config);
  if (seed) cfg.seed = *seed;
  cfg.resampling.threads = threads;
  const auto results = run_replication(cfg.studies, cfg.resampling, cfg.seed);
  json doc = json::array();
  for (const auto& r : results) {
    doc.push_back({{"study", r.study},
                   {"kind", r.kind == OutcomeKind::Gaussian ? "gaussian" : "binomial"},
                   {"p_value", number(r.p_value)},
                   {"pip", number(r.pip.estimate)},
                   {"lower", optional_number(r.pip.lower_bound)},
                   {"upper", optional_number(r.pip.upper_bound)}});
  }
  out << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probability of improved prediction: estimators, relations and studies", "pipkit"};
  app.require_subcommand(1);

  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed (default 20220101)");
    sub->add_option("--threads", threads, "Worker threads, 0 = all cores; never changes results");
  };

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate the PIP of a full model over a null model from CSV data");
  est->add_option("--csv", ea.csv, "Input CSV with a header row")->required();
  est->add_option("--outcome", ea.outcome, "Outcome column")->capture_default_str();
  est->add_option("--null", ea.null_cols, "Comma-separated null-model covariates (empty = intercept only)");
  est->add_option("--full", ea.full_cols, "Comma-separated full-model covariates")->required();
  est->add_option("--model", ea.model, "ols or gbm")->capture_default_str();
  est->add_option("--method", ea.method, "c1, c2, expected, split, cv or repcv")->capture_default_str();
  est->add_option("--k", ea.k, "Folds")->capture_default_str();
  est->add_option("--repeats", ea.repeats, "Repeats for repcv")->capture_default_str();
  est->add_option("--alpha", ea.alpha, "Quantile level of the repcv bounds")->capture_default_str();
  est->add_option("--split-ratio", ea.split_ratio, "Training fraction for split")->capture_default_str();
  est->add_option("--ties", ea.ties, "strict or half")->capture_default_str();
  est->add_option("--group", ea.group, "0/1 column to stratify folds and splits on");
  est->add_option("--n-mc", ea.n_mc, "Monte-Carlo draws for expected")->capture_default_str();
  est->add_option("--n-trees", ea.gbm.n_trees, "GBM trees")->capture_default_str();
  est->add_option("--depth", ea.gbm.interaction_depth, "GBM tree depth")->capture_default_str();
  est->add_option("--shrinkage", ea.gbm.shrinkage, "GBM learning rate")->capture_default_str();
  est->add_option("--min-obs", ea.gbm.min_obs_per_node, "GBM minimum rows per leaf")->capture_default_str();
  add_common(est);

  RelateArgs ra;
  double p_in = 0.0, pip_in = 0.0, sigma_in = 0.0;
  auto* rel = app.add_subcommand("relate", "Convert between PIP, p-value, dMSE and overlap");
  rel->add_option("--n", ra.n, "Total sample size")->required();
  auto* p_opt = rel->add_option("--p", p_in, "Two-sided p-value");
  auto* pip_opt = rel->add_option("--pip", pip_in, "PIP in [0.5, 1)");
  auto* sigma_opt = rel->add_option("--sigma", sigma_in, "Error SD for dMSE");
  add_common(rel);

  std::string sim_config, sim_out;
  std::size_t sim_runs = 0;
  auto* sim = app.add_subcommand("simulate", "Run a simulation study from a JSON config");
  sim->add_option("--config", sim_config, "Study config JSON")->required();
  sim->add_option("--out", sim_out, "Output directory for results.csv and decisions.json")->required();
  auto* runs_opt = sim->add_option("--runs", sim_runs, "Override the number of runs");
  add_common(sim);

  std::string rep_config;
  auto* rep = app.add_subcommand("replicate", "Replicate published two-group studies from a JSON config");
  rep->add_option("--config", rep_config, "Replication config JSON")->required();
  add_common(rep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;
  try {
    if (est->parsed()) return cmd_estimate(ea, seed, threads, out);
    if (rel->parsed()) {
      if (p_opt->count()) ra.p = p_in;
      if (pip_opt->count()) ra.pip = pip_in;
      if (sigma_opt->count()) ra.sigma = sigma_in;
      return cmd_relate(ra, out);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_config, sim_out, seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          runs_opt->count() ? std::optional<std::size_t>(sim_runs) : std::nullopt, threads, out);
    }
    if (rep->parsed()) {
      return cmd_replicate(rep_config, seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt, threads,
                           out);
    }
  } catch (const BadInput& e) {
    err << "pipkit: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const CsvError& e) {
    err << "pipkit: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    err << "pipkit: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::domain_error& e) {
    err << "pipkit: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "pipkit: estimation failed: " << e.what() << '\n';
    return kExitEstimationFailed;
  }
  return kExitBadInput;
}

}  // namespace pipkit::cli
