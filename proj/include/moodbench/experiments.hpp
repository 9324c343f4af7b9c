#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moodbench/baselines.hpp"
#include "moodbench/config.hpp"
#include "moodbench/csv_io.hpp"
#include "moodbench/grid_search.hpp"
#include "moodbench/instances.hpp"
#include "moodbench/krr.hpp"
#include "moodbench/linreg.hpp"
#include "moodbench/metrics.hpp"
#include "moodbench/protocol.hpp"
#include "moodbench/report.hpp"
#include "moodbench/rng.hpp"
#include "moodbench/svm.hpp"
#include "moodbench/transform.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Position-based child seeds: each stochastic stage is addressed by a tag
/// like "p2/grid/T=14/LOIOCV/run=3/user=u05", so schedules and partial reruns
/// cannot change the streams.
inline std::uint64_t stage_seed(std::uint64_t master, const std::string& tag) {
  return child_seed(master, fnv1a64(tag));
}

namespace detail {

inline Eigen::MatrixXd feature_matrix(const InstanceSet& xs,
                                      const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd X(rows.size(), xs.feature_dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < xs.feature_dim; ++j)
      X(r, j) = xs.instances[rows[r]].features[j];
  return X;
}

inline Eigen::VectorXd target_vector(const InstanceSet& xs,
                                     const std::vector<std::size_t>& rows) {
  Eigen::VectorXd y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    y[r] = xs.instances[rows[r]].target;
  return y;
}

inline std::vector<int> label_vector(const InstanceSet& xs,
                                     const std::vector<std::size_t>& rows) {
  std::vector<int> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    y[r] = xs.instances[rows[r]].target > 0.5 ? 1 : 0;
  return y;
}

inline std::vector<std::size_t> all_indices(const InstanceSet& xs) {
  std::vector<std::size_t> idx(xs.instances.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

struct RegressionPool {
  std::vector<double> preds, truths;
  std::vector<std::string> users;
  std::vector<std::size_t> inst;  // source instance index per prediction
};

struct ClassificationPool {
  std::vector<int> preds, truths;
  std::vector<std::string> users;
  std::vector<std::size_t> inst;
};

// Pools test predictions over all splits; `predict_split` returns values
// aligned with split.test_indices.
template <typename F>
RegressionPool pool_regression(const InstanceSet& xs,
                               const std::vector<Split>& splits, F&& predict_split) {
  RegressionPool pool;
  for (const Split& s : splits) {
    std::vector<double> preds = predict_split(s);
    for (std::size_t t = 0; t < s.test_indices.size(); ++t) {
      std::size_t idx = s.test_indices[t];
      pool.preds.push_back(preds[t]);
      pool.truths.push_back(xs.instances[idx].target);
      pool.users.push_back(xs.instances[idx].user_id);
      pool.inst.push_back(idx);
    }
  }
  return pool;
}

template <typename F>
ClassificationPool pool_classification(const InstanceSet& xs,
                                       const std::vector<Split>& splits,
                                       F&& predict_split) {
  ClassificationPool pool;
  for (const Split& s : splits) {
    std::vector<int> preds = predict_split(s);
    for (std::size_t t = 0; t < s.test_indices.size(); ++t) {
      std::size_t idx = s.test_indices[t];
      pool.preds.push_back(preds[t]);
      pool.truths.push_back(xs.instances[idx].target > 0.5 ? 1 : 0);
      pool.users.push_back(xs.instances[idx].user_id);
      pool.inst.push_back(idx);
    }
  }
  return pool;
}

inline AuditSummary audit_all(const std::vector<Split>& splits,
                              const InstanceSet& xs) {
  std::vector<LeakageReport> reports;
  reports.reserve(splits.size());
  for (const Split& s : splits) reports.push_back(audit_split(s, xs));
  AuditSummary summary = AuditSummary::from(reports);
  // A LOUOCV split that shares users between train and test is a harness
  // bug, not a finding.
  if (!splits.empty() && splits.front().protocol == Protocol::kLouocv &&
      summary.user_overlap > 0)
    throw std::logic_error("louocv split produced user overlap");
  return summary;
}

inline Protocol parse_protocol(const std::string& s) {
  if (s == "loiocv") return Protocol::kLoiocv;
  if (s == "louocv") return Protocol::kLouocv;
  if (s == "mixed") return Protocol::kMixed;
  throw ConfigError("unknown protocol '" + s + "'");
}

inline std::vector<Split> make_splits(const InstanceSet& xs, Protocol proto,
                                      int mixed_k, std::uint64_t mixed_seed,
                                      std::vector<std::string>* skipped = nullptr) {
  switch (proto) {
    case Protocol::kLouocv:
      return louocv_splits(xs);
    case Protocol::kLoiocv: {
      LoiocvPlan plan = loiocv_splits(xs);
      if (skipped) *skipped = plan.skipped_users;
      if (plan.splits.empty())
        throw PreconditionError("loiocv: no user has 2 or more instances");
      return plan.splits;
    }
    case Protocol::kMixed:
      return mixed_kfold_splits(xs, mixed_k, mixed_seed);
  }
  throw std::logic_error("unreachable");
}

/// LOIOCV hyperparameters are chosen once per user (inner CV on the user's
/// first-fold training split); LOUOCV/MIXED once per setting on the first
/// fold's training portion. The choice is then reused across that unit's
/// folds to keep complete nested search affordable.
template <typename ChooseHp, typename HpType>
std::map<std::string, HpType> per_user_hyper(const InstanceSet& xs,
                                             const std::vector<Split>& splits,
                                             ChooseHp&& choose, HpType) {
  std::map<std::string, HpType> by_user;
  for (const Split& s : splits) {
    const std::string& uid = xs.instances[s.test_indices.front()].user_id;
    if (by_user.count(uid)) continue;
    by_user.emplace(uid, choose(uid, s));
  }
  return by_user;
}

inline std::string resolve_target(const Dataset& ds, const ExperimentConfig& cfg) {
  if (!cfg.target.empty()) {
    if (!ds.target_ranges.count(cfg.target))
      throw PreconditionError("target '" + cfg.target + "' not in dataset");
    return cfg.target;
  }
  if (ds.target_ranges.size() == 1) return ds.target_ranges.begin()->first;
  throw ConfigError("dataset has several targets; set \"target\" in the config");
}

/// Drops users with fewer than min_reports reports carrying the target.
inline Dataset filter_min_reports(const Dataset& ds, const std::string& target,
                                  int min_reports, int* dropped_users) {
  std::map<std::string, int> counts;
  for (const auto& r : ds.reports)
    if (r.targets.count(target)) ++counts[r.user_id];
  std::set<std::string> keep;
  int dropped = 0;
  for (const auto& [uid, c] : counts)
    c >= min_reports ? (void)keep.insert(uid) : (void)++dropped;
  if (dropped_users) *dropped_users = dropped;
  if (keep.empty())
    throw PreconditionError("no user satisfies the report-count precondition");
  Dataset out;
  out.target_ranges = ds.target_ranges;
  out.feature_dim = ds.feature_dim;
  out.targets_only = ds.targets_only;
  for (const auto& rd : ds.raw_days)
    if (keep.count(rd.user_id)) out.raw_days.push_back(rd);
  for (const auto& r : ds.reports)
    if (keep.count(r.user_id)) out.reports.push_back(r);
  return out;
}

inline InstanceSet drop_single_instance_users(const InstanceSet& xs,
                                              int* dropped_users) {
  std::map<std::string, int> counts;
  for (const auto& inst : xs.instances) ++counts[inst.user_id];
  int dropped = 0;
  for (const auto& [uid, c] : counts) dropped += c < 2;
  if (dropped_users) *dropped_users = dropped;
  if (dropped == 0) return xs;
  InstanceSet out = xs;
  out.instances.clear();
  for (const auto& inst : xs.instances)
    if (counts[inst.user_id] >= 2) out.instances.push_back(inst);
  return out;
}

inline ReportRow make_row(const std::string& setting, const std::string& protocol,
                          const std::string& mode, const std::string& target,
                          const std::string& metric, std::optional<double> value,
                          const AuditSummary& audit, std::size_t n) {
  ReportRow r;
  r.setting = setting;
  r.protocol = protocol;
  r.mode = mode;
  r.target = target;
  r.metric = metric;
  r.value = value;
  r.audit = audit;
  r.n = n;
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// P1: autoregressive features from past target values (LR + forward selection)
// ---------------------------------------------------------------------------

inline ReportTable run_p1(const Dataset& ds, const ExperimentConfig& cfg) {
  const std::string target = detail::resolve_target(ds, cfg);
  int dropped_users = 0;
  Dataset data = detail::filter_min_reports(ds, target, 3, &dropped_users);

  const int W = cfg.window_days > 0 ? cfg.window_days : 3;
  const int lags = cfg.target_lags >= 0 ? cfg.target_lags : 2;
  const Aggregation agg =
      cfg.aggregation == "sum" ? Aggregation::kSum : Aggregation::kMean;
  InstanceSet xs = build_instances(data, target, W, agg, lags);
  if (xs.empty())
    throw PreconditionError("p1: no report satisfies the data-density rule");

  ReportTable rt;
  rt.experiment = "p1";
  rt.seed = cfg.seed;
  rt.dataset_digest = dataset_digest(ds);
  rt.config_echo = experiment_config_echo(cfg);
  rt.notes.push_back("dropped_users_lt3_reports: " + std::to_string(dropped_users));
  rt.notes.push_back("dropped_insufficient_history: " +
                     std::to_string(xs.dropped_insufficient_history));
  rt.notes.push_back("dropped_empty_window: " +
                     std::to_string(xs.dropped_empty_window));

  const int d_total = xs.feature_dim;
  const int d_raw = d_total - lags;
  const int max_feats =
      cfg.sfs_max_features > 0 ? cfg.sfs_max_features : std::min(d_total, 20);

  std::vector<int> all_cols(d_total), raw_cols(d_raw), lag_cols(lags);
  for (int j = 0; j < d_total; ++j) all_cols[j] = j;
  for (int j = 0; j < d_raw; ++j) raw_cols[j] = j;
  for (int j = 0; j < lags; ++j) lag_cols[j] = d_raw + j;

  const Eigen::MatrixXd X = detail::feature_matrix(xs, detail::all_indices(xs));
  const Eigen::VectorXd y = detail::target_vector(xs, detail::all_indices(xs));

  // LINREG_SFS over a column subset, selection nested inside every fold.
  auto eval_linreg_sfs = [&](const std::vector<Split>& splits,
                             const std::vector<int>& cols,
                             const std::string& tag) {
    return detail::pool_regression(xs, splits, [&](const Split& s) {
      Eigen::MatrixXd Xtr(s.train_indices.size(), cols.size());
      Eigen::VectorXd ytr(s.train_indices.size());
      for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j)
          Xtr(r, j) = X(s.train_indices[r], cols[j]);
        ytr[r] = y[s.train_indices[r]];
      }
      std::uint64_t sfs_seed =
          stage_seed(cfg.seed, "p1/sfs/" + tag + "/fold=" + std::to_string(s.fold));
      std::vector<int> sel = sfs_select(Xtr, ytr,
                                        std::min<int>(max_feats, cols.size()),
                                        cfg.sfs_inner_k, sfs_seed, cfg.linreg_ridge);
      LinearModel model = sel.empty() ? fit_intercept_only(ytr)
                                      : fit_linreg(Xtr, ytr, cfg.linreg_ridge, sel);
      std::vector<double> preds;
      preds.reserve(s.test_indices.size());
      for (std::size_t t : s.test_indices) {
        Eigen::RowVectorXd row(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) row[j] = X(t, cols[j]);
        preds.push_back(model.predict(row));
      }
      return preds;
    });
  };

  auto push_regression_rows = [&](const std::string& setting,
                                  const std::string& protocol,
                                  const detail::RegressionPool& pool,
                                  const AuditSummary& audit) {
    rt.rows.push_back(detail::make_row(setting, protocol, "", target, "mse",
                                       mse(pool.preds, pool.truths), audit,
                                       pool.preds.size()));
    rt.rows.push_back(detail::make_row(
        setting, protocol, "", target, "likamwa_accuracy",
        likamwa_accuracy(pool.preds, pool.truths, xs.target_range), audit,
        pool.preds.size()));
  };

  LoiocvPlan loiocv_plan = loiocv_splits(xs);
  if (loiocv_plan.splits.empty())
    throw PreconditionError("p1: loiocv has no usable user");
  rt.notes.push_back("loiocv_skipped_users: " +
                     std::to_string(loiocv_plan.skipped_users.size()));
  const std::vector<Split>& loiocv = loiocv_plan.splits;
  std::vector<Split> louocv = louocv_splits(xs);
  AuditSummary audit_loiocv = detail::audit_all(loiocv, xs);
  AuditSummary audit_louocv = detail::audit_all(louocv, xs);

  detail::RegressionPool model_loiocv = eval_linreg_sfs(loiocv, all_cols, "loiocv");
  detail::RegressionPool model_louocv = eval_linreg_sfs(louocv, all_cols, "louocv");

  // A (AVG): the personalised mean, paired through the LOIOCV folds.
  detail::RegressionPool avg_pool =
      detail::pool_regression(xs, loiocv, [&](const Split& s) {
        std::vector<std::string> users;
        std::vector<double> targets;
        for (std::size_t i : s.train_indices) {
          users.push_back(xs.instances[i].user_id);
          targets.push_back(xs.instances[i].target);
        }
        AvgBaseline avg = AvgBaseline::fit(users, targets, /*per_user=*/true);
        std::vector<double> preds;
        for (std::size_t t : s.test_indices)
          preds.push_back(avg.predict(xs.instances[t].user_id));
        return preds;
      });

  // B (LAST): the user's most recent prior report; lags >= 1 guarantees one.
  detail::RegressionPool last_pool;
  {
    std::vector<std::string> users;
    std::vector<int> days;
    std::vector<double> values;
    for (const auto& r : data.reports) {
      auto it = r.targets.find(target);
      if (it == r.targets.end()) continue;
      users.push_back(r.user_id);
      days.push_back(r.day);
      values.push_back(it->second);
    }
    LastBaseline last = LastBaseline::fit(users, days, values);
    int excluded = 0;
    for (std::size_t i = 0; i < xs.instances.size(); ++i) {
      const Instance& inst = xs.instances[i];
      auto p = last.predict(inst.user_id, inst.form_day);
      if (!p) {
        ++excluded;
        continue;
      }
      last_pool.preds.push_back(*p);
      last_pool.truths.push_back(inst.target);
      last_pool.users.push_back(inst.user_id);
      last_pool.inst.push_back(i);
    }
    rt.notes.push_back("last_excluded_instances: " + std::to_string(excluded));
  }

  // C (-feat): plain ridge LR on the target-lag columns, LOUOCV.
  detail::RegressionPool feat_pool =
      detail::pool_regression(xs, louocv, [&](const Split& s) {
        Eigen::MatrixXd Xtr(s.train_indices.size(), X.cols());
        Eigen::VectorXd ytr(s.train_indices.size());
        for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
          Xtr.row(r) = X.row(s.train_indices[r]);
          ytr[r] = y[s.train_indices[r]];
        }
        LinearModel model = fit_linreg(Xtr, ytr, cfg.linreg_ridge, lag_cols);
        std::vector<double> preds;
        for (std::size_t t : s.test_indices) preds.push_back(model.predict(X.row(t)));
        return preds;
      });

  // D (-mood): LR + SFS restricted to the non-target columns, LOUOCV.
  detail::RegressionPool mood_pool = eval_linreg_sfs(louocv, raw_cols, "louocv-mood");

  push_regression_rows("LOIOCV", "LOIOCV", model_loiocv, audit_loiocv);
  push_regression_rows("LOUOCV", "LOUOCV", model_louocv, audit_louocv);
  push_regression_rows("A (AVG)", "LOIOCV", avg_pool, audit_loiocv);
  push_regression_rows("B (LAST)", "NONE", last_pool, AuditSummary{});
  push_regression_rows("C (-feat)", "LOUOCV", feat_pool, audit_louocv);
  push_regression_rows("D (-mood)", "LOUOCV", mood_pool, audit_louocv);

  // Naive gates: a LOUOCV model must beat the user's average; a LOIOCV model
  // must beat both the average and the last-entered score.
  const double mse_avg = mse(avg_pool.preds, avg_pool.truths);
  const double mse_last = mse(last_pool.preds, last_pool.truths);
  rt.rows.push_back(detail::make_row(
      "LOIOCV", "LOIOCV", "", target, "beats_naive",
      mse(model_loiocv.preds, model_loiocv.truths) < mse_avg &&
              mse(model_loiocv.preds, model_loiocv.truths) < mse_last
          ? 1.0
          : 0.0,
      audit_loiocv, model_loiocv.preds.size()));
  rt.rows.push_back(detail::make_row(
      "LOUOCV", "LOUOCV", "", target, "beats_naive",
      mse(model_louocv.preds, model_louocv.truths) < mse_avg ? 1.0 : 0.0,
      audit_louocv, model_louocv.preds.size()));
  return rt;
}

// ---------------------------------------------------------------------------
// P2: smoothed/detrended/binarized target, SVM over sliding history windows
// ---------------------------------------------------------------------------

namespace detail {

struct P2Series {
  Dataset labeled;     // reports carry the 0/1 labels
  int dropped_users = 0;
};

inline P2Series p2_label_chain(const Dataset& ds, const std::string& target,
                               int ma_window) {
  std::map<std::string, LabeledSeries> series;
  for (const auto& r : ds.reports) {
    auto it = r.targets.find(target);
    if (it == r.targets.end()) continue;
    auto& s = series[r.user_id];
    s.user_id = r.user_id;
    s.points.emplace_back(r.day, it->second);
  }
  P2Series out;
  out.labeled.feature_dim = ds.feature_dim;
  out.labeled.target_ranges[target] = {0.0, 1.0};
  std::set<std::string> kept;
  for (auto& [uid, s] : series) {
    std::sort(s.points.begin(), s.points.end());
    if (s.points.size() < 15) {
      ++out.dropped_users;
      continue;
    }
    kept.insert(uid);
    LabeledSeries chain = weekday_detrend(moving_average_filter(s, ma_window));
    for (const auto& [day, label] : binarize_one_std(chain)) {
      MoodReport r;
      r.user_id = uid;
      r.day = day;
      r.targets[target] = static_cast<double>(label);
      out.labeled.reports.push_back(std::move(r));
    }
  }
  if (kept.empty())
    throw PreconditionError("p2: no user has 15 or more reports");
  for (const auto& rd : ds.raw_days)
    if (kept.count(rd.user_id)) out.labeled.raw_days.push_back(rd);
  return out;
}

}  // namespace detail

inline ReportTable run_p2(const Dataset& ds, const ExperimentConfig& cfg) {
  const std::string target = detail::resolve_target(ds, cfg);
  detail::P2Series chain = detail::p2_label_chain(ds, target, 14);
  const Aggregation agg =
      cfg.aggregation == "sum" ? Aggregation::kSum : Aggregation::kMean;

  std::vector<int> t_list = cfg.t_hist_values;
  if (t_list.empty())
    for (int t = 1; t <= 14; ++t) t_list.push_back(t);
  std::sort(t_list.begin(), t_list.end());
  const int t_table = t_list.back();
  std::vector<int> rand_ts = cfg.rand_t_hist.empty()
                                 ? std::vector<int>{t_table}
                                 : cfg.rand_t_hist;
  std::vector<std::string> protocols =
      cfg.protocols.empty() ? std::vector<std::string>{"loiocv", "louocv"}
                            : cfg.protocols;

  ReportTable rt;
  rt.experiment = "p2";
  rt.seed = cfg.seed;
  rt.dataset_digest = dataset_digest(ds);
  rt.config_echo = experiment_config_echo(cfg);
  rt.notes.push_back("dropped_users_lt15_reports: " +
                     std::to_string(chain.dropped_users));

  // One SVM evaluation of an instance set under given splits; LOIOCV tunes
  // hyperparameters per user, the pooled protocols on the first fold.
  auto eval_svm = [&](const InstanceSet& xs, const std::vector<Split>& splits,
                      Protocol proto, const std::string& tag) {
    const Eigen::MatrixXd X = detail::feature_matrix(xs, detail::all_indices(xs));
    const std::vector<int> yl = detail::label_vector(xs, detail::all_indices(xs));
    const double gamma_scale = 1.0 / static_cast<double>(xs.feature_dim);
    std::vector<double> gamma_grid;
    for (double g : cfg.svm_gamma_grid) gamma_grid.push_back(g * gamma_scale);

    auto grid_on = [&](const Split& s, const std::string& grid_tag) {
      Eigen::MatrixXd Xtr(s.train_indices.size(), X.cols());
      std::vector<int> ytr(s.train_indices.size());
      for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
        Xtr.row(r) = X.row(s.train_indices[r]);
        ytr[r] = yl[s.train_indices[r]];
      }
      return svm_grid_search(Xtr, ytr, cfg.svm_c_grid, gamma_grid,
                             cfg.grid_inner_k, stage_seed(cfg.seed, grid_tag));
    };

    std::map<std::string, SvmHyper> hp_by_user;
    SvmHyper hp_pooled;
    if (proto == Protocol::kLoiocv) {
      hp_by_user = detail::per_user_hyper(
          xs, splits,
          [&](const std::string& uid, const Split& s) {
            return grid_on(s, tag + "/grid/user=" + uid);
          },
          SvmHyper{});
    } else {
      hp_pooled = grid_on(splits.front(), tag + "/grid");
    }

    return detail::pool_classification(xs, splits, [&](const Split& s) {
      const SvmHyper& hp =
          proto == Protocol::kLoiocv
              ? hp_by_user.at(xs.instances[s.test_indices.front()].user_id)
              : hp_pooled;
      Eigen::MatrixXd Xtr(s.train_indices.size(), X.cols());
      std::vector<int> ytr(s.train_indices.size());
      for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
        Xtr.row(r) = X.row(s.train_indices[r]);
        ytr[r] = yl[s.train_indices[r]];
      }
      SvmRbf::Params params;
      params.C = hp.C;
      params.gamma = hp.gamma;
      SvmRbf model = SvmRbf::fit(Xtr, ytr, params);
      std::vector<int> preds;
      for (std::size_t t : s.test_indices)
        preds.push_back(model.predict(X.row(t)));
      return preds;
    });
  };

  auto push_cls_rows = [&](const std::string& setting, const std::string& protocol,
                           const std::string& mode,
                           const detail::ClassificationPool& pool,
                           const AuditSummary& audit) {
    SensSpec ss = sensitivity_specificity(pool.preds, pool.truths);
    rt.rows.push_back(detail::make_row(setting, protocol, mode, target,
                                       "sensitivity", ss.sensitivity, audit,
                                       pool.preds.size()));
    rt.rows.push_back(detail::make_row(setting, protocol, mode, target,
                                       "specificity", ss.specificity, audit,
                                       pool.preds.size()));
    rt.rows.push_back(detail::make_row(setting, protocol, mode, target,
                                       "accuracy",
                                       accuracy(pool.preds, pool.truths), audit,
                                       pool.preds.size()));
  };

  // Per-protocol model accuracy at the table window, for the naive gates.
  std::map<std::string, double> feat_accuracy_at_table;

  for (int T : t_list) {
    InstanceSet xs = build_instances(chain.labeled, target, T, agg, 0);
    if (xs.empty())
      throw PreconditionError("p2: empty instance set at T=" + std::to_string(T));
    std::string mode = "T=" + std::to_string(T);
    for (const std::string& pname : protocols) {
      Protocol proto = detail::parse_protocol(pname);
      if (proto == Protocol::kMixed)
        throw ConfigError("p2 runs under loiocv/louocv only");
      std::vector<Split> splits =
          detail::make_splits(xs, proto, cfg.mixed_k, 0, nullptr);
      AuditSummary audit = detail::audit_all(splits, xs);
      std::string tag = "p2/" + mode + "/" + pname;
      detail::ClassificationPool pool = eval_svm(xs, splits, proto, tag);
      push_cls_rows("FEAT", protocol_name(proto), mode, pool, audit);
      if (T == t_table)
        feat_accuracy_at_table[pname] = accuracy(pool.preds, pool.truths);

      if (T == t_table) {
        InstanceSet xs_date = make_probe_features(xs, ProbeKind::kDateOnly);
        detail::ClassificationPool date_pool =
            eval_svm(xs_date, splits, proto, tag + "/date");
        push_cls_rows("DATE", protocol_name(proto), mode, date_pool, audit);
      }
    }
  }

  // LAST: previous observed label of the same user, protocol-free.
  detail::ClassificationPool last_pool;
  double last_accuracy = 0.0;
  {
    InstanceSet xs = build_instances(chain.labeled, target, t_table, agg, 0);
    std::vector<std::string> users;
    std::vector<int> days;
    std::vector<double> values;
    for (const auto& r : chain.labeled.reports) {
      users.push_back(r.user_id);
      days.push_back(r.day);
      values.push_back(r.targets.at(target));
    }
    LastBaseline last = LastBaseline::fit(users, days, values);
    int excluded = 0;
    for (std::size_t i = 0; i < xs.instances.size(); ++i) {
      const Instance& inst = xs.instances[i];
      auto p = last.predict(inst.user_id, inst.form_day);
      if (!p) {
        ++excluded;
        continue;
      }
      last_pool.preds.push_back(*p > 0.5 ? 1 : 0);
      last_pool.truths.push_back(inst.target > 0.5 ? 1 : 0);
      last_pool.users.push_back(inst.user_id);
      last_pool.inst.push_back(i);
    }
    rt.notes.push_back("last_excluded_instances: " + std::to_string(excluded));
    push_cls_rows("LAST", "NONE", "T=" + std::to_string(t_table), last_pool,
                  AuditSummary{});
    last_accuracy = accuracy(last_pool.preds, last_pool.truths);
  }

  // RAND: event-level features replaced by fresh noise per run, same splits.
  for (int T : rand_ts) {
    InstanceSet xs_shape = build_instances(chain.labeled, target, T, agg, 0);
    std::string mode = "T=" + std::to_string(T);
    for (const std::string& pname : protocols) {
      Protocol proto = detail::parse_protocol(pname);
      std::vector<Split> splits =
          detail::make_splits(xs_shape, proto, cfg.mixed_k, 0, nullptr);
      AuditSummary audit = detail::audit_all(splits, xs_shape);
      double sum_sens = 0.0, sum_spec = 0.0, sum_acc = 0.0;
      int n_sens = 0, n_spec = 0;
      std::size_t pool_n = 0;
      for (int run = 0; run < cfg.rand_runs; ++run) {
        std::uint64_t rand_seed = stage_seed(
            cfg.seed, "p2/rand/" + mode + "/run=" + std::to_string(run));
        Dataset rds = randomize_raw_features(chain.labeled, rand_seed);
        InstanceSet xs = build_instances(rds, target, T, agg, 0);
        std::string tag =
            "p2/rand/" + mode + "/" + pname + "/run=" + std::to_string(run);
        detail::ClassificationPool pool = eval_svm(xs, splits, proto, tag);
        SensSpec ss = sensitivity_specificity(pool.preds, pool.truths);
        if (ss.sensitivity) {
          sum_sens += *ss.sensitivity;
          ++n_sens;
        }
        if (ss.specificity) {
          sum_spec += *ss.specificity;
          ++n_spec;
        }
        sum_acc += accuracy(pool.preds, pool.truths);
        pool_n = pool.preds.size();
      }
      auto mean_or_na = [](double sum, int n) -> std::optional<double> {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
      };
      rt.rows.push_back(detail::make_row("RAND", protocol_name(proto), mode,
                                         target, "sensitivity",
                                         mean_or_na(sum_sens, n_sens), audit,
                                         pool_n));
      rt.rows.push_back(detail::make_row("RAND", protocol_name(proto), mode,
                                         target, "specificity",
                                         mean_or_na(sum_spec, n_spec), audit,
                                         pool_n));
      rt.rows.push_back(detail::make_row(
          "RAND", protocol_name(proto), mode, target, "accuracy",
          sum_acc / static_cast<double>(cfg.rand_runs), audit, pool_n));
    }
  }

  // Naive gates at the table window: personalised majority for both
  // protocols, plus the LAST classifier for the personalised setting.
  {
    InstanceSet xs = build_instances(chain.labeled, target, t_table, agg, 0);
    LoiocvPlan plan = loiocv_splits(xs);
    detail::ClassificationPool majority_pool = detail::pool_classification(
        xs, plan.splits, [&](const Split& s) {
          std::vector<int> labels;
          for (std::size_t i : s.train_indices)
            labels.push_back(xs.instances[i].target > 0.5 ? 1 : 0);
          MajorityBaseline m = MajorityBaseline::fit(labels);
          return std::vector<int>(s.test_indices.size(), m.predict());
        });
    const double majority_acc =
        accuracy(majority_pool.preds, majority_pool.truths);
    rt.rows.push_back(detail::make_row(
        "MAJORITY", "LOIOCV", "T=" + std::to_string(t_table), target, "accuracy",
        majority_acc, AuditSummary{}, majority_pool.preds.size()));
    for (const std::string& pname : protocols) {
      Protocol proto = detail::parse_protocol(pname);
      double model_acc = feat_accuracy_at_table.at(pname);
      bool beats = proto == Protocol::kLoiocv
                       ? model_acc > majority_acc && model_acc > last_accuracy
                       : model_acc > majority_acc;
      rt.rows.push_back(detail::make_row(
          "FEAT", protocol_name(proto), "T=" + std::to_string(t_table), target,
          "beats_naive", beats ? 1.0 : 0.0, AuditSummary{}, 0));
    }
  }
  return rt;
}

// ---------------------------------------------------------------------------
// P3 regression: KRR under the three protocols, leaky vs fitted normalization
// ---------------------------------------------------------------------------

inline ReportTable run_p3_regression(const Dataset& ds, const ExperimentConfig& cfg) {
  const std::string target = detail::resolve_target(ds, cfg);
  const int W = cfg.window_days > 0 ? cfg.window_days : 1;
  const Aggregation agg =
      cfg.aggregation == "sum" ? Aggregation::kSum : Aggregation::kMean;
  InstanceSet xs0 = build_instances(ds, target, W, agg, 0);
  int dropped_users = 0;
  InstanceSet xs = detail::drop_single_instance_users(xs0, &dropped_users);
  if (xs.empty())
    throw PreconditionError("p3r: no user has 2 or more instances");

  ReportTable rt;
  rt.experiment = "p3r";
  rt.seed = cfg.seed;
  rt.dataset_digest = dataset_digest(ds);
  rt.config_echo = experiment_config_echo(cfg);
  rt.notes.push_back("dropped_users_lt2_instances: " + std::to_string(dropped_users));
  rt.notes.push_back("dropped_empty_window: " +
                     std::to_string(xs0.dropped_empty_window));

  std::vector<std::string> protocols =
      cfg.protocols.empty() ? std::vector<std::string>{"mixed", "loiocv", "louocv"}
                            : cfg.protocols;

  const double gamma_scale = 1.0 / static_cast<double>(xs.feature_dim);
  std::vector<double> gamma_grid;
  for (double g : cfg.krr_gamma_grid) gamma_grid.push_back(g * gamma_scale);

  const std::uint64_t mixed_seed = stage_seed(cfg.seed, "p3r/mixed-shuffle");
  InstanceSet xs_plus;  // leaky normalization, computed once over everything
  bool have_plus = false;
  for (const auto& v : cfg.normalization)
    if (v == "per_user") {
      xs_plus = per_user_zscore(xs);
      have_plus = true;
    }

  // Pools predictions for one (protocol, variant); variant "+" uses the
  // pre-normalized set, "-" refits the z-score inside every fold.
  auto eval_krr = [&](const std::vector<Split>& splits, Protocol proto,
                      bool leaky_norm, const std::string& tag) {
    const InstanceSet& base = leaky_norm ? xs_plus : xs;

    auto split_xy = [&](const Split& s) {
      InstanceSet train_set = subset_instances(base, s.train_indices);
      InstanceSet test_set = subset_instances(base, s.test_indices);
      if (!leaky_norm) {
        InstanceSet fitted_train = train_fitted_zscore(train_set, train_set);
        test_set = train_fitted_zscore(train_set, test_set);
        train_set = std::move(fitted_train);
      }
      return std::make_pair(std::move(train_set), std::move(test_set));
    };

    auto grid_on = [&](const Split& s, const std::string& grid_tag) {
      auto [train_set, test_set] = split_xy(s);
      Eigen::MatrixXd Xtr =
          detail::feature_matrix(train_set, detail::all_indices(train_set));
      Eigen::VectorXd ytr =
          detail::target_vector(train_set, detail::all_indices(train_set));
      return krr_grid_search(Xtr, ytr, cfg.krr_lambda_grid, gamma_grid,
                             cfg.grid_inner_k, stage_seed(cfg.seed, grid_tag));
    };

    std::map<std::string, KrrHyper> hp_by_user;
    KrrHyper hp_pooled;
    if (proto == Protocol::kLoiocv) {
      hp_by_user = detail::per_user_hyper(
          xs, splits,
          [&](const std::string& uid, const Split& s) {
            return grid_on(s, tag + "/grid/user=" + uid);
          },
          KrrHyper{});
    } else {
      hp_pooled = grid_on(splits.front(), tag + "/grid");
    }

    return detail::pool_regression(xs, splits, [&](const Split& s) {
      const KrrHyper& hp =
          proto == Protocol::kLoiocv
              ? hp_by_user.at(xs.instances[s.test_indices.front()].user_id)
              : hp_pooled;
      auto [train_set, test_set] = split_xy(s);
      Eigen::MatrixXd Xtr =
          detail::feature_matrix(train_set, detail::all_indices(train_set));
      Eigen::VectorXd ytr =
          detail::target_vector(train_set, detail::all_indices(train_set));
      KrrRbf model = KrrRbf::fit(Xtr, ytr, hp.lambda, hp.gamma);
      Eigen::MatrixXd Xte =
          detail::feature_matrix(test_set, detail::all_indices(test_set));
      Eigen::VectorXd preds = model.predict_all(Xte);
      return std::vector<double>(preds.data(), preds.data() + preds.size());
    });
  };

  std::map<std::string, double> model_rmse;  // "protocol/mode" -> rmse

  for (const std::string& pname : protocols) {
    Protocol proto = detail::parse_protocol(pname);
    std::vector<std::string> skipped;
    std::vector<Split> splits =
        detail::make_splits(xs, proto, cfg.mixed_k, mixed_seed, &skipped);
    AuditSummary audit = detail::audit_all(splits, xs);
    for (const auto& variant : cfg.normalization) {
      const bool leaky = variant == "per_user";
      if (leaky && !have_plus) continue;
      const std::string mode = leaky ? "+" : "-";
      std::string tag = "p3r/" + pname + "/" + mode;
      detail::RegressionPool pool = eval_krr(splits, proto, leaky, tag);
      Grouping grouping =
          proto == Protocol::kMixed ? Grouping::kGlobal : Grouping::kPerUser;
      rt.rows.push_back(detail::make_row(
          "KRR_RBF", protocol_name(proto), mode, target,
          grouping == Grouping::kGlobal ? "r2_global" : "r2_per_user",
          r2_grouped(pool.preds, pool.truths, pool.users, grouping), audit,
          pool.preds.size()));
      rt.rows.push_back(detail::make_row("KRR_RBF", protocol_name(proto), mode,
                                         target, "rmse",
                                         rmse(pool.preds, pool.truths), audit,
                                         pool.preds.size()));
      model_rmse[pname + "/" + mode] = rmse(pool.preds, pool.truths);
    }
  }

  // User-identity probe: one-hot user id only, MIXED.
  {
    InstanceSet xs_uid = make_probe_features(xs, ProbeKind::kUserIdOnly);
    std::vector<Split> splits =
        mixed_kfold_splits(xs_uid, cfg.mixed_k, mixed_seed);
    AuditSummary audit = detail::audit_all(splits, xs_uid);
    const double uid_gamma_scale = 1.0 / static_cast<double>(xs_uid.feature_dim);
    std::vector<double> uid_gamma_grid;
    for (double g : cfg.krr_gamma_grid) uid_gamma_grid.push_back(g * uid_gamma_scale);

    InstanceSet first_train = subset_instances(xs_uid, splits.front().train_indices);
    Eigen::MatrixXd X0 =
        detail::feature_matrix(first_train, detail::all_indices(first_train));
    Eigen::VectorXd y0 =
        detail::target_vector(first_train, detail::all_indices(first_train));
    KrrHyper hp = krr_grid_search(X0, y0, cfg.krr_lambda_grid, uid_gamma_grid,
                                  cfg.grid_inner_k,
                                  stage_seed(cfg.seed, "p3r/user-id/grid"));
    detail::RegressionPool pool =
        detail::pool_regression(xs_uid, splits, [&](const Split& s) {
          InstanceSet train_set = subset_instances(xs_uid, s.train_indices);
          Eigen::MatrixXd Xtr =
              detail::feature_matrix(train_set, detail::all_indices(train_set));
          Eigen::VectorXd ytr =
              detail::target_vector(train_set, detail::all_indices(train_set));
          KrrRbf model = KrrRbf::fit(Xtr, ytr, hp.lambda, hp.gamma);
          InstanceSet test_set = subset_instances(xs_uid, s.test_indices);
          Eigen::MatrixXd Xte =
              detail::feature_matrix(test_set, detail::all_indices(test_set));
          Eigen::VectorXd preds = model.predict_all(Xte);
          return std::vector<double>(preds.data(), preds.data() + preds.size());
        });
    rt.rows.push_back(detail::make_row(
        "USER_ID_ONLY", "MIXED", "", target, "r2_global",
        r2_grouped(pool.preds, pool.truths, pool.users, Grouping::kGlobal),
        audit, pool.preds.size()));
    rt.rows.push_back(detail::make_row("USER_ID_ONLY", "MIXED", "", target,
                                       "rmse", rmse(pool.preds, pool.truths),
                                       audit, pool.preds.size()));
  }

  // Naive gates against the personalised mean and last-entered score.
  {
    LoiocvPlan plan = loiocv_splits(xs);
    detail::RegressionPool avg_pool =
        detail::pool_regression(xs, plan.splits, [&](const Split& s) {
          std::vector<std::string> users;
          std::vector<double> targets;
          for (std::size_t i : s.train_indices) {
            users.push_back(xs.instances[i].user_id);
            targets.push_back(xs.instances[i].target);
          }
          AvgBaseline avg = AvgBaseline::fit(users, targets, true);
          std::vector<double> preds;
          for (std::size_t t : s.test_indices)
            preds.push_back(avg.predict(xs.instances[t].user_id));
          return preds;
        });
    const double avg_rmse = rmse(avg_pool.preds, avg_pool.truths);

    std::vector<std::string> users;
    std::vector<int> days;
    std::vector<double> values;
    for (const auto& inst : xs.instances) {
      users.push_back(inst.user_id);
      days.push_back(inst.form_day);
      values.push_back(inst.target);
    }
    LastBaseline last = LastBaseline::fit(users, days, values);
    std::vector<double> last_preds, last_truths;
    for (const auto& inst : xs.instances) {
      auto p = last.predict(inst.user_id, inst.form_day);
      if (!p) continue;
      last_preds.push_back(*p);
      last_truths.push_back(inst.target);
    }
    const double last_rmse = rmse(last_preds, last_truths);

    for (const std::string& pname : protocols) {
      if (pname == "mixed") continue;
      for (const auto& variant : cfg.normalization) {
        const std::string mode = variant == "per_user" ? "+" : "-";
        auto it = model_rmse.find(pname + "/" + mode);
        if (it == model_rmse.end()) continue;
        bool beats = pname == "loiocv"
                         ? it->second < avg_rmse && it->second < last_rmse
                         : it->second < avg_rmse;
        rt.rows.push_back(detail::make_row(
            "KRR_RBF", pname == "loiocv" ? "LOIOCV" : "LOUOCV", mode, target,
            "beats_naive", beats ? 1.0 : 0.0, AuditSummary{}, 0));
      }
    }
  }
  return rt;
}

// ---------------------------------------------------------------------------
// P3 classification: top/bottom binning (global vs personalised), SVM
// ---------------------------------------------------------------------------

inline ReportTable run_p3_classification(const Dataset& ds,
                                         const ExperimentConfig& cfg) {
  const std::string target = detail::resolve_target(ds, cfg);
  const int W = cfg.window_days > 0 ? cfg.window_days : 1;
  const Aggregation agg =
      cfg.aggregation == "sum" ? Aggregation::kSum : Aggregation::kMean;
  InstanceSet xs = build_instances(ds, target, W, agg, 0);
  if (xs.empty()) throw PreconditionError("p3c: empty instance set");

  ReportTable rt;
  rt.experiment = "p3c";
  rt.seed = cfg.seed;
  rt.dataset_digest = dataset_digest(ds);
  rt.config_echo = experiment_config_echo(cfg);

  std::vector<std::string> protocols =
      cfg.protocols.empty() ? std::vector<std::string>{"mixed", "loiocv", "louocv"}
                            : cfg.protocols;

  for (const std::string& mode_name : cfg.bin_modes) {
    const BinMode mode = mode_name == "uniq" ? BinMode::kUniq : BinMode::kPers;
    const std::string mode_label = mode == BinMode::kUniq ? "UNIQ" : "PERS";
    BinnedSet binned = bin_top_bottom(xs, cfg.bin_fraction, mode);
    rt.notes.push_back("bin_" + mode_name + "_skipped_users: " +
                       std::to_string(binned.skipped_users.size()));
    rt.notes.push_back("bin_" + mode_name + "_retained: " +
                       std::to_string(binned.indices.size()));
    if (binned.indices.size() < 4)
      throw PreconditionError("p3c: binning retained fewer than 4 instances");

    InstanceSet sub = subset_instances(xs, binned.indices);
    sub.target_range = {0.0, 1.0};
    for (std::size_t i = 0; i < sub.instances.size(); ++i)
      sub.instances[i].target = static_cast<double>(binned.labels[i]);

    const double gamma_scale = 1.0 / static_cast<double>(sub.feature_dim);
    std::vector<double> gamma_grid;
    for (double g : cfg.svm_gamma_grid) gamma_grid.push_back(g * gamma_scale);
    const Eigen::MatrixXd X = detail::feature_matrix(sub, detail::all_indices(sub));
    const std::vector<int> yl = detail::label_vector(sub, detail::all_indices(sub));

    // Personalised references for the naive gates, shared by protocols.
    LoiocvPlan ref_plan = loiocv_splits(sub);
    double majority_acc = 0.0;
    if (!ref_plan.splits.empty()) {
      detail::ClassificationPool majority_pool = detail::pool_classification(
          sub, ref_plan.splits, [&](const Split& s) {
            std::vector<int> labels;
            for (std::size_t i : s.train_indices)
              labels.push_back(sub.instances[i].target > 0.5 ? 1 : 0);
            MajorityBaseline m = MajorityBaseline::fit(labels);
            return std::vector<int>(s.test_indices.size(), m.predict());
          });
      majority_acc = accuracy(majority_pool.preds, majority_pool.truths);
    }
    double last_acc = 0.0;
    {
      std::vector<std::string> users;
      std::vector<int> days;
      std::vector<double> values;
      for (const auto& inst : sub.instances) {
        users.push_back(inst.user_id);
        days.push_back(inst.form_day);
        values.push_back(inst.target);
      }
      LastBaseline last = LastBaseline::fit(users, days, values);
      std::vector<int> preds, truths;
      for (const auto& inst : sub.instances) {
        auto p = last.predict(inst.user_id, inst.form_day);
        if (!p) continue;
        preds.push_back(*p > 0.5 ? 1 : 0);
        truths.push_back(inst.target > 0.5 ? 1 : 0);
      }
      if (!preds.empty()) last_acc = accuracy(preds, truths);
    }

    for (const std::string& pname : protocols) {
      Protocol proto = detail::parse_protocol(pname);
      std::vector<std::string> skipped;
      std::vector<Split> splits = detail::make_splits(
          sub, proto, cfg.mixed_k,
          stage_seed(cfg.seed, "p3c/mixed-shuffle/" + mode_name), &skipped);
      if (proto == Protocol::kLoiocv)
        rt.notes.push_back("loiocv_" + mode_name + "_skipped_users: " +
                           std::to_string(skipped.size()));
      AuditSummary audit = detail::audit_all(splits, sub);

      auto grid_on = [&](const Split& s, const std::string& grid_tag) {
        Eigen::MatrixXd Xtr(s.train_indices.size(), X.cols());
        std::vector<int> ytr(s.train_indices.size());
        for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
          Xtr.row(r) = X.row(s.train_indices[r]);
          ytr[r] = yl[s.train_indices[r]];
        }
        return svm_grid_search(Xtr, ytr, cfg.svm_c_grid, gamma_grid,
                               cfg.grid_inner_k, stage_seed(cfg.seed, grid_tag));
      };
      std::map<std::string, SvmHyper> hp_by_user;
      SvmHyper hp_pooled;
      std::string tag = "p3c/" + mode_name + "/" + pname;
      if (proto == Protocol::kLoiocv) {
        hp_by_user = detail::per_user_hyper(
            sub, splits,
            [&](const std::string& uid, const Split& s) {
              return grid_on(s, tag + "/grid/user=" + uid);
            },
            SvmHyper{});
      } else {
        hp_pooled = grid_on(splits.front(), tag + "/grid");
      }

      detail::ClassificationPool pool =
          detail::pool_classification(sub, splits, [&](const Split& s) {
            const SvmHyper& hp =
                proto == Protocol::kLoiocv
                    ? hp_by_user.at(sub.instances[s.test_indices.front()].user_id)
                    : hp_pooled;
            Eigen::MatrixXd Xtr(s.train_indices.size(), X.cols());
            std::vector<int> ytr(s.train_indices.size());
            for (std::size_t r = 0; r < s.train_indices.size(); ++r) {
              Xtr.row(r) = X.row(s.train_indices[r]);
              ytr[r] = yl[s.train_indices[r]];
            }
            SvmRbf::Params params;
            params.C = hp.C;
            params.gamma = hp.gamma;
            SvmRbf model = SvmRbf::fit(Xtr, ytr, params);
            std::vector<int> preds;
            for (std::size_t t : s.test_indices)
              preds.push_back(model.predict(X.row(t)));
            return preds;
          });
      const double model_acc = accuracy(pool.preds, pool.truths);
      rt.rows.push_back(detail::make_row("SVM_RBF", protocol_name(proto),
                                         mode_label, target, "accuracy",
                                         model_acc, audit, pool.preds.size()));

      // Majority reference paired on the same splits.
      detail::ClassificationPool ref_pool =
          detail::pool_classification(sub, splits, [&](const Split& s) {
            std::vector<int> labels;
            for (std::size_t i : s.train_indices)
              labels.push_back(sub.instances[i].target > 0.5 ? 1 : 0);
            MajorityBaseline m = MajorityBaseline::fit(labels);
            return std::vector<int>(s.test_indices.size(), m.predict());
          });
      rt.rows.push_back(detail::make_row(
          "MAJORITY", protocol_name(proto), mode_label, target, "accuracy",
          accuracy(ref_pool.preds, ref_pool.truths), audit,
          ref_pool.preds.size()));

      if (proto != Protocol::kMixed) {
        bool beats = proto == Protocol::kLoiocv
                         ? model_acc > majority_acc && model_acc > last_acc
                         : model_acc > majority_acc;
        rt.rows.push_back(detail::make_row("SVM_RBF", protocol_name(proto),
                                           mode_label, target, "beats_naive",
                                           beats ? 1.0 : 0.0, AuditSummary{}, 0));
      }
    }
  }
  return rt;
}

inline ReportTable run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kP1: return run_p1(ds, cfg);
    case ExperimentKind::kP2: return run_p2(ds, cfg);
    case ExperimentKind::kP3Regression: return run_p3_regression(ds, cfg);
    case ExperimentKind::kP3Classification: return run_p3_classification(ds, cfg);
  }
  throw std::logic_error("unreachable");
}

}  // namespace moodbench
