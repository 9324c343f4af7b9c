#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "moodbench/types.hpp"

namespace moodbench {

/// Builds one instance per report with window [form_day - W + 1, form_day]
/// clamped at day 0. Features are the per-dimension aggregate over the raw
/// days present in the window, followed by the user's k most recent prior
/// target values (most recent first). Reports with an empty window or fewer
/// than k prior reports are dropped and counted.
inline InstanceSet build_instances(const Dataset& ds, const std::string& target,
                                   int window_days,
                                   Aggregation aggregation = Aggregation::kMean,
                                   int include_last_k_targets = 0) {
  if (window_days < 1) throw PreconditionError("window_days must be >= 1");
  if (include_last_k_targets < 0)
    throw PreconditionError("include_last_k_targets must be >= 0");
  if (!ds.target_ranges.count(target))
    throw PreconditionError("unknown target '" + target + "'");

  InstanceSet xs;
  xs.target_name = target;
  xs.target_range = ds.target_ranges.at(target);
  xs.window_days = window_days;
  xs.aggregation = aggregation;
  xs.n_lag_columns = include_last_k_targets;
  xs.feature_dim = ds.feature_dim + include_last_k_targets;

  // Per-user indices, both sorted by day.
  std::map<std::string, std::vector<const RawDay*>> raw_by_user;
  for (const auto& rd : ds.raw_days) raw_by_user[rd.user_id].push_back(&rd);
  for (auto& [uid, v] : raw_by_user)
    std::sort(v.begin(), v.end(),
              [](const RawDay* a, const RawDay* b) { return a->day < b->day; });

  std::map<std::string, std::vector<const MoodReport*>> rep_by_user;
  for (const auto& r : ds.reports)
    if (r.targets.count(target)) rep_by_user[r.user_id].push_back(&r);
  for (auto& [uid, v] : rep_by_user)
    std::sort(v.begin(), v.end(), [](const MoodReport* a, const MoodReport* b) {
      return a->day < b->day;
    });

  for (const auto& [uid, reports] : rep_by_user) {
    const auto raw_it = raw_by_user.find(uid);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const MoodReport& rep = *reports[i];
      if (static_cast<int>(i) < include_last_k_targets) {
        ++xs.dropped_insufficient_history;
        continue;
      }
      const int end = rep.day;
      const int start = std::max(0, end - window_days + 1);

      std::vector<double> agg(ds.feature_dim, 0.0);
      int present = 0;
      if (raw_it != raw_by_user.end()) {
        for (const RawDay* rd : raw_it->second) {
          if (rd->day < start) continue;
          if (rd->day > end) break;
          for (int j = 0; j < ds.feature_dim; ++j) agg[j] += rd->features[j];
          ++present;
        }
      }
      if (present == 0 && ds.feature_dim > 0) {
        ++xs.dropped_empty_window;
        continue;
      }
      if (aggregation == Aggregation::kMean && present > 0)
        for (double& v : agg) v /= present;

      Instance inst;
      inst.user_id = uid;
      inst.form_day = rep.day;
      inst.window_start = start;
      inst.window_end = end;
      inst.features = std::move(agg);
      for (int k = 1; k <= include_last_k_targets; ++k)
        inst.features.push_back(reports[i - k]->targets.at(target));
      inst.target = rep.targets.at(target);
      for (const auto& [name, v] : rep.targets)
        if (name != target) inst.aux_targets[name] = v;
      xs.instances.push_back(std::move(inst));
    }
  }
  return xs;
}

/// Keeps only the instances at `keep` (indices into xs), preserving order.
inline InstanceSet subset_instances(const InstanceSet& xs,
                                    const std::vector<std::size_t>& keep) {
  InstanceSet out = xs;
  out.instances.clear();
  out.instances.reserve(keep.size());
  for (std::size_t idx : keep) out.instances.push_back(xs.instances[idx]);
  return out;
}

inline std::vector<std::string> sorted_users(const InstanceSet& xs) {
  std::vector<std::string> users;
  for (const auto& inst : xs.instances) users.push_back(inst.user_id);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return users;
}

}  // namespace moodbench
