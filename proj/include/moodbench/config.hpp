#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "moodbench/synthetic.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

enum class ExperimentKind { kP1, kP2, kP3Regression, kP3Classification };

inline const char* experiment_name(ExperimentKind e) {
  switch (e) {
    case ExperimentKind::kP1: return "p1";
    case ExperimentKind::kP2: return "p2";
    case ExperimentKind::kP3Regression: return "p3r";
    case ExperimentKind::kP3Classification: return "p3c";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "p1") return ExperimentKind::kP1;
  if (s == "p2") return ExperimentKind::kP2;
  if (s == "p3r") return ExperimentKind::kP3Regression;
  if (s == "p3c") return ExperimentKind::kP3Classification;
  throw ConfigError("unknown experiment '" + s + "' (expected p1|p2|p3r|p3c)");
}

/// All pipeline knobs. Field names mirror the JSON config keys one to one;
/// unknown keys are rejected.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kP1;
  std::string target;                       // empty: sole target of the dataset
  std::vector<std::string> protocols;       // empty: per-experiment default
  int window_days = 0;                      // 0: per-experiment default (P1 3, P3 1)
  int target_lags = -1;                     // -1: default (P1 2, else 0)
  std::string aggregation = "mean";
  std::vector<int> t_hist_values;           // P2 sweep; empty: 1..14
  std::vector<int> rand_t_hist;             // P2 RAND windows; empty: {max sweep}
  int rand_runs = 100;
  int mixed_k = 5;
  std::vector<double> svm_c_grid = {0.1, 1.0, 10.0, 100.0};
  std::vector<double> svm_gamma_grid = {0.01, 0.1, 1.0};   // divided by dim at use
  std::vector<double> krr_lambda_grid = {1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> krr_gamma_grid = {0.01, 0.1, 1.0};   // divided by dim at use
  double linreg_ridge = 1e-6;
  int sfs_max_features = 0;                 // 0: min(d, 20)
  int sfs_inner_k = 5;
  int grid_inner_k = 3;
  std::vector<std::string> normalization = {"per_user", "train_fitted"};  // P3R
  double bin_fraction = 0.3;                // P3C
  std::vector<std::string> bin_modes = {"uniq", "pers"};   // P3C
  bool last_report_of_day_only = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (rand_runs < 1) throw ConfigError("rand_runs must be >= 1");
    if (mixed_k < 2) throw ConfigError("mixed_k must be >= 2");
    if (linreg_ridge <= 0.0) throw ConfigError("linreg_ridge must be > 0");
    if (bin_fraction <= 0.0 || bin_fraction > 0.5)
      throw ConfigError("bin_fraction must lie in (0, 0.5]");
    for (double c : svm_c_grid)
      if (c <= 0.0) throw ConfigError("svm_c_grid values must be > 0");
    for (double g : svm_gamma_grid)
      if (g <= 0.0) throw ConfigError("svm_gamma_grid values must be > 0");
    for (double l : krr_lambda_grid)
      if (l <= 0.0) throw ConfigError("krr_lambda_grid values must be > 0");
    for (double g : krr_gamma_grid)
      if (g <= 0.0) throw ConfigError("krr_gamma_grid values must be > 0");
    for (int t : t_hist_values)
      if (t < 1) throw ConfigError("t_hist_values must be >= 1");
    for (const auto& p : protocols)
      if (p != "loiocv" && p != "louocv" && p != "mixed")
        throw ConfigError("unknown protocol '" + p + "'");
    for (const auto& m : bin_modes)
      if (m != "uniq" && m != "pers")
        throw ConfigError("unknown bin mode '" + m + "'");
    for (const auto& v : normalization)
      if (v != "per_user" && v != "train_fitted")
        throw ConfigError("unknown normalization '" + v + "'");
  }
};

namespace detail {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  return j;
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& known,
                                const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(path + ": unknown config key '" + it.key() + "'");
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out,
             const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": bad value for '" + std::string(key) + "'");
  }
}

}  // namespace detail

inline GenConfig load_gen_config(const std::string& path) {
  nlohmann::json j = detail::load_json_file(path);
  static const std::set<std::string> known = {
      "n_users",       "days_per_user",  "user_baseline_sd",
      "within_user_sd", "ar_coefficient", "d_noise",
      "d_id",          "d_signal",       "signal_gain",
      "identity_gain", "report_every_k_days", "target_name",
      "target_lo",     "target_hi",      "seed"};
  detail::reject_unknown_keys(j, known, path);
  for (const char* req : {"n_users", "days_per_user", "seed"})
    if (!j.contains(req))
      throw ConfigError(path + ": missing required key '" + std::string(req) + "'");

  GenConfig cfg;
  detail::read_if(j, "n_users", cfg.n_users, path);
  detail::read_if(j, "days_per_user", cfg.days_per_user, path);
  detail::read_if(j, "user_baseline_sd", cfg.user_baseline_sd, path);
  detail::read_if(j, "within_user_sd", cfg.within_user_sd, path);
  detail::read_if(j, "ar_coefficient", cfg.ar_coefficient, path);
  detail::read_if(j, "d_noise", cfg.d_noise, path);
  detail::read_if(j, "d_id", cfg.d_id, path);
  detail::read_if(j, "d_signal", cfg.d_signal, path);
  detail::read_if(j, "signal_gain", cfg.signal_gain, path);
  detail::read_if(j, "identity_gain", cfg.identity_gain, path);
  detail::read_if(j, "report_every_k_days", cfg.report_every_k_days, path);
  detail::read_if(j, "target_name", cfg.target_name, path);
  detail::read_if(j, "target_lo", cfg.target_lo, path);
  detail::read_if(j, "target_hi", cfg.target_hi, path);
  detail::read_if(j, "seed", cfg.seed, path);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

inline nlohmann::json gen_config_json(const GenConfig& cfg) {
  nlohmann::json j;
  j["n_users"] = cfg.n_users;
  j["days_per_user"] = cfg.days_per_user;
  j["user_baseline_sd"] = cfg.user_baseline_sd;
  j["within_user_sd"] = cfg.within_user_sd;
  j["ar_coefficient"] = cfg.ar_coefficient;
  j["d_noise"] = cfg.d_noise;
  j["d_id"] = cfg.d_id;
  j["d_signal"] = cfg.d_signal;
  j["signal_gain"] = cfg.signal_gain;
  j["identity_gain"] = cfg.identity_gain;
  j["report_every_k_days"] = cfg.report_every_k_days;
  j["target_name"] = cfg.target_name;
  j["target_lo"] = cfg.target_lo;
  j["target_hi"] = cfg.target_hi;
  j["seed"] = cfg.seed;
  return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path,
                                               const std::string& cli_experiment) {
  nlohmann::json j = detail::load_json_file(path);
  static const std::set<std::string> known = {
      "experiment",    "target",          "protocols",      "window_days",
      "target_lags",   "aggregation",     "t_hist_values",  "rand_t_hist",
      "rand_runs",     "mixed_k",         "svm_c_grid",     "svm_gamma_grid",
      "krr_lambda_grid", "krr_gamma_grid", "linreg_ridge",  "sfs_max_features",
      "sfs_inner_k",   "grid_inner_k",    "normalization",  "bin_fraction",
      "bin_modes",     "last_report_of_day_only", "seed"};
  detail::reject_unknown_keys(j, known, path);
  if (!j.contains("seed"))
    throw ConfigError(path + ": missing required key 'seed'");

  ExperimentConfig cfg;
  cfg.experiment = parse_experiment_kind(cli_experiment);
  if (j.contains("experiment")) {
    std::string in_file;
    detail::read_if(j, "experiment", in_file, path);
    if (in_file != cli_experiment)
      throw ConfigError(path + ": config experiment '" + in_file +
                        "' does not match requested '" + cli_experiment + "'");
  }
  detail::read_if(j, "target", cfg.target, path);
  detail::read_if(j, "protocols", cfg.protocols, path);
  detail::read_if(j, "window_days", cfg.window_days, path);
  detail::read_if(j, "target_lags", cfg.target_lags, path);
  detail::read_if(j, "aggregation", cfg.aggregation, path);
  detail::read_if(j, "t_hist_values", cfg.t_hist_values, path);
  detail::read_if(j, "rand_t_hist", cfg.rand_t_hist, path);
  detail::read_if(j, "rand_runs", cfg.rand_runs, path);
  detail::read_if(j, "mixed_k", cfg.mixed_k, path);
  detail::read_if(j, "svm_c_grid", cfg.svm_c_grid, path);
  detail::read_if(j, "svm_gamma_grid", cfg.svm_gamma_grid, path);
  detail::read_if(j, "krr_lambda_grid", cfg.krr_lambda_grid, path);
  detail::read_if(j, "krr_gamma_grid", cfg.krr_gamma_grid, path);
  detail::read_if(j, "linreg_ridge", cfg.linreg_ridge, path);
  detail::read_if(j, "sfs_max_features", cfg.sfs_max_features, path);
  detail::read_if(j, "sfs_inner_k", cfg.sfs_inner_k, path);
  detail::read_if(j, "grid_inner_k", cfg.grid_inner_k, path);
  detail::read_if(j, "normalization", cfg.normalization, path);
  detail::read_if(j, "bin_fraction", cfg.bin_fraction, path);
  detail::read_if(j, "bin_modes", cfg.bin_modes, path);
  detail::read_if(j, "last_report_of_day_only", cfg.last_report_of_day_only, path);
  detail::read_if(j, "seed", cfg.seed, path);
  if (cfg.aggregation != "mean" && cfg.aggregation != "sum")
    throw ConfigError(path + ": aggregation must be 'mean' or 'sum'");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

/// Canonical (sorted-key) echo of the effective configuration; lands in the
/// report provenance block, so it must be byte-stable.
inline std::string experiment_config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["target"] = cfg.target;
  j["protocols"] = cfg.protocols;
  j["window_days"] = cfg.window_days;
  j["target_lags"] = cfg.target_lags;
  j["aggregation"] = cfg.aggregation;
  j["t_hist_values"] = cfg.t_hist_values;
  j["rand_t_hist"] = cfg.rand_t_hist;
  j["rand_runs"] = cfg.rand_runs;
  j["mixed_k"] = cfg.mixed_k;
  j["svm_c_grid"] = cfg.svm_c_grid;
  j["svm_gamma_grid"] = cfg.svm_gamma_grid;
  j["krr_lambda_grid"] = cfg.krr_lambda_grid;
  j["krr_gamma_grid"] = cfg.krr_gamma_grid;
  j["linreg_ridge"] = cfg.linreg_ridge;
  j["sfs_max_features"] = cfg.sfs_max_features;
  j["sfs_inner_k"] = cfg.sfs_inner_k;
  j["grid_inner_k"] = cfg.grid_inner_k;
  j["normalization"] = cfg.normalization;
  j["bin_fraction"] = cfg.bin_fraction;
  j["bin_modes"] = cfg.bin_modes;
  j["last_report_of_day_only"] = cfg.last_report_of_day_only;
  j["seed"] = cfg.seed;
  return j.dump();
}

}  // namespace moodbench
