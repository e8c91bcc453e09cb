#include "pipkit/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <set>

namespace pipkit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!names.count(key)) fail(path + "." + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double require_number(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path + "." + key, "required field missing");
  return get_number(obj, path, key, 0.0);
}

std::uint64_t get_count(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    fail(path + "." + key, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t require_count(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path + "." + key, "required field missing");
  return get_count(obj, path, key, 0);
}

std::string get_string(const json& obj, const std::string& path, const char* key, std::string fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

template <class Fn>
void wrap_validation(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  } catch (const std::domain_error& e) {
    fail(path, e.what());
  }
}

json parse_document(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

ResamplingConfig parse_resampling(const json& root, const std::string& path) {
  ResamplingConfig cfg;
  if (!root.contains("resampling")) return cfg;
  const auto& r = root.at("resampling");
  const std::string p = path + ".resampling";
  check_keys(r, p, {"k", "repeats", "alpha", "split_ratio", "tie_policy"});
  cfg.k = static_cast<int>(get_count(r, p, "k", static_cast<std::uint64_t>(cfg.k)));
  cfg.repeats = static_cast<int>(get_count(r, p, "repeats", static_cast<std::uint64_t>(cfg.repeats)));
  cfg.alpha = get_number(r, p, "alpha", cfg.alpha);
  cfg.split_ratio = get_number(r, p, "split_ratio", cfg.split_ratio);
  const std::string ties = get_string(r, p, "tie_policy", std::string(to_string(cfg.tie_policy)));
  wrap_validation(p + ".tie_policy", [&] { cfg.tie_policy = parse_tie_policy(ties); });
  wrap_validation(p, [&] { cfg.validate(); });
  return cfg;
}

GBMHyperparams parse_gbm(const json& root, const std::string& path) {
  GBMHyperparams hp;
  if (!root.contains("gbm")) return hp;
  const auto& g = root.at("gbm");
  const std::string p = path + ".gbm";
  check_keys(g, p, {"n_trees", "interaction_depth", "shrinkage", "min_obs_per_node"});
  hp.n_trees = static_cast<int>(get_count(g, p, "n_trees", static_cast<std::uint64_t>(hp.n_trees)));
  hp.interaction_depth =
      static_cast<int>(get_count(g, p, "interaction_depth", static_cast<std::uint64_t>(hp.interaction_depth)));
  hp.shrinkage = get_number(g, p, "shrinkage", hp.shrinkage);
  hp.min_obs_per_node =
      static_cast<int>(get_count(g, p, "min_obs_per_node", static_cast<std::uint64_t>(hp.min_obs_per_node)));
  wrap_validation(p, [&] { hp.validate(); });
  return hp;
}

std::uint64_t parse_seed(const json& root) { return get_count(root, "$", "seed", 20220101); }

}  // namespace

SimulationConfig parse_simulation_config(std::istream& in) {
  const json root = parse_document(in);
  check_keys(root, "$", {"study", "seed", "runs", "estimators", "n_mc", "n_t", "resampling", "gbm", "scenarios"});
  SimulationConfig cfg;
  const std::string study = get_string(root, "$", "study", "two_sample");
  if (study == "two_sample") {
    cfg.kind = StudyKind::TwoSample;
  } else if (study == "gbm") {
    cfg.kind = StudyKind::Gbm;
  } else {
    fail("$.study", "expected \"two_sample\" or \"gbm\"");
  }
  auto& opt = cfg.options;
  opt.master_seed = parse_seed(root);
  opt.runs = get_count(root, "$", "runs", opt.runs);
  opt.n_mc = get_count(root, "$", "n_mc", opt.n_mc);
  opt.n_t = get_count(root, "$", "n_t", opt.n_t);
  opt.resampling = parse_resampling(root, "$");
  opt.gbm = parse_gbm(root, "$");
  wrap_validation("$", [&] { opt.validate(); });

  if (root.contains("estimators")) {
    if (cfg.kind == StudyKind::Gbm) fail("$.estimators", "the GBM study uses a fixed estimator set");
    const auto& list = root.at("estimators");
    if (!list.is_array() || list.empty()) fail("$.estimators", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = "$.estimators[" + std::to_string(i) + "]";
      if (!list[i].is_string()) fail(p, "expected a string");
      wrap_validation(p, [&] { cfg.estimators.push_back(parse_estimator(list[i].get<std::string>())); });
    }
  } else if (cfg.kind == StudyKind::TwoSample) {
    cfg.estimators = all_estimators();
  }

  if (!root.contains("scenarios") || !root.at("scenarios").is_array()) fail("$.scenarios", "expected an array");
  const auto& scenarios = root.at("scenarios");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& s = scenarios[i];
    const std::string p = "$.scenarios[" + std::to_string(i) + "]";
    if (cfg.kind == StudyKind::TwoSample) {
      check_keys(s, p, {"name", "n", "beta0", "beta1", "sigma"});
      TwoSampleScenario sc;
      sc.n = require_count(s, p, "n");
      sc.beta0 = get_number(s, p, "beta0", 0.0);
      sc.beta1 = require_number(s, p, "beta1");
      sc.sigma = get_number(s, p, "sigma", 1.0);
      sc.name = get_string(s, p, "name", "n" + std::to_string(sc.n) + "_b" + json(sc.beta1).dump());
      wrap_validation(p, [&] { sc.validate(); });
      cfg.two_sample.push_back(std::move(sc));
    } else {
      check_keys(s, p, {"name", "n", "noise_sd"});
      NonlinearScenario sc;
      sc.n = require_count(s, p, "n");
      sc.noise_sd = get_number(s, p, "noise_sd", 1.6);
      sc.name = get_string(s, p, "name", "n" + std::to_string(sc.n));
      wrap_validation(p, [&] { sc.validate(); });
      cfg.nonlinear.push_back(std::move(sc));
    }
  }
  return cfg;
}

ReplicationConfig parse_replication_config(std::istream& in) {
  const json root = parse_document(in);
  check_keys(root, "$", {"seed", "resampling", "studies"});
  ReplicationConfig cfg;
  cfg.seed = parse_seed(root);
  cfg.resampling = parse_resampling(root, "$");
  if (!root.contains("studies") || !root.at("studies").is_array()) fail("$.studies", "expected an array");
  const auto& studies = root.at("studies");
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const auto& s = studies[i];
    const std::string p = "$.studies[" + std::to_string(i) + "]";
    if (!s.is_object()) fail(p, "expected an object");
    ReplicationStudySpec spec;
    const std::string kind = get_string(s, p, "kind", "gaussian");
    if (kind == "gaussian") {
      check_keys(s, p, {"name", "kind", "n1", "n2", "mean1", "sd1", "mean2", "sd2"});
      spec.kind = OutcomeKind::Gaussian;
      spec.mean1 = require_number(s, p, "mean1");
      spec.sd1 = require_number(s, p, "sd1");
      spec.mean2 = require_number(s, p, "mean2");
      spec.sd2 = require_number(s, p, "sd2");
    } else if (kind == "binomial") {
      check_keys(s, p, {"name", "kind", "n1", "n2", "p1", "p2"});
      spec.kind = OutcomeKind::Binomial;
      spec.p1 = require_number(s, p, "p1");
      spec.p2 = require_number(s, p, "p2");
    } else {
      fail(p + ".kind", "expected \"gaussian\" or \"binomial\"");
    }
    spec.name = get_string(s, p, "name", "study" + std::to_string(i));
    spec.n1 = require_count(s, p, "n1");
    spec.n2 = require_count(s, p, "n2");
    wrap_validation(p, [&] { spec.validate(); });
    cfg.studies.push_back(std::move(spec));
  }
  return cfg;
}

std::string decision_tables_json(const std::vector<DecisionTable>& tables, int decimals) {
  const double scale = std::pow(10.0, decimals);
  auto rounded = [&](double v) { return std::round(v * scale) / scale; };
  json out = json::array();
  for (const auto& t : tables) {
    json rows = json::array();
    for (const auto& r : t.rows) {
      rows.push_back({{"rule", r.rule}, {"correct", r.correct}, {"runs", r.runs}, {"rate", rounded(r.rate())}});
    }
    json entry = {{"scenario", t.scenario}, {"n", t.n}, {"rules", std::move(rows)}};
    entry["beta1"] = t.beta1 ? json(*t.beta1) : json(nullptr);
    out.push_back(std::move(entry));
  }
  return out.dump(2);
}

}  // namespace pipkit
