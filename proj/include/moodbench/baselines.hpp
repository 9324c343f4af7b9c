#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moodbench/instances.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

/// Predicts the training-target mean, per user or globally. Per-user mode
/// falls back to the global mean for unseen users, with the fallback counted.
class AvgBaseline {
 public:
  static AvgBaseline fit(const std::vector<std::string>& users,
                         const std::vector<double>& targets, bool per_user) {
    if (targets.empty() || users.size() != targets.size())
      throw PreconditionError("AvgBaseline::fit: empty or mismatched train set");
    AvgBaseline m;
    m.per_user_ = per_user;
    double sum = 0.0;
    std::map<std::string, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      sum += targets[i];
      auto& [s, c] = acc[users[i]];
      s += targets[i];
      c += 1;
    }
    m.global_mean_ = sum / static_cast<double>(targets.size());
    for (const auto& [uid, sc] : acc)
      m.user_mean_[uid] = sc.first / sc.second;
    return m;
  }

  double predict(const std::string& user) const {
    if (!per_user_) return global_mean_;
    auto it = user_mean_.find(user);
    if (it == user_mean_.end()) {
      ++fallbacks_;
      return global_mean_;
    }
    return it->second;
  }

  bool knows(const std::string& user) const { return user_mean_.count(user) > 0; }
  int fallback_count() const { return fallbacks_; }
  double global_mean() const { return global_mean_; }

 private:
  bool per_user_ = true;
  double global_mean_ = 0.0;
  std::map<std::string, double> user_mean_;
  mutable int fallbacks_ = 0;
};

/// Predicts the user's most recent value strictly before the queried day.
/// Fitted on (user, day, value) triplets; returns nullopt when the user has
/// no prior value, so callers can exclude and count such instances.
class LastBaseline {
 public:
  static LastBaseline fit(const std::vector<std::string>& users,
                          const std::vector<int>& days,
                          const std::vector<double>& values) {
    if (users.size() != days.size() || users.size() != values.size())
      throw PreconditionError("LastBaseline::fit: mismatched inputs");
    LastBaseline m;
    for (std::size_t i = 0; i < users.size(); ++i)
      m.history_[users[i]].emplace_back(days[i], values[i]);
    for (auto& [uid, h] : m.history_) std::sort(h.begin(), h.end());
    return m;
  }

  std::optional<double> predict(const std::string& user, int day) const {
    auto it = history_.find(user);
    if (it == history_.end()) return std::nullopt;
    const auto& h = it->second;
    auto pos = std::lower_bound(h.begin(), h.end(), std::make_pair(day, -1e300));
    if (pos == h.begin()) return std::nullopt;
    return std::prev(pos)->second;
  }

 private:
  std::map<std::string, std::vector<std::pair<int, double>>> history_;
};

/// Majority label of the training pool; ties resolve to 0.
class MajorityBaseline {
 public:
  static MajorityBaseline fit(const std::vector<int>& labels) {
    if (labels.empty())
      throw PreconditionError("MajorityBaseline::fit: empty train set");
    MajorityBaseline m;
    int ones = 0;
    for (int l : labels) ones += l == 1;
    m.label_ = 2 * ones > static_cast<int>(labels.size()) ? 1 : 0;
    return m;
  }

  int predict() const { return label_; }

 private:
  int label_ = 0;
};

enum class ProbeKind { kDateOnly, kUserIdOnly };

/// Replaces all features with one bias probe: DATE keeps only the form day,
/// USER_ID keeps only a one-hot encoding of the user (over users present in
/// xs, in sorted order). Lag columns are dropped along with the rest.
inline InstanceSet make_probe_features(const InstanceSet& xs, ProbeKind kind) {
  if (xs.instances.empty())
    throw PreconditionError("make_probe_features: empty instance set");
  InstanceSet out = xs;
  out.n_lag_columns = 0;
  if (kind == ProbeKind::kDateOnly) {
    out.feature_dim = 1;
    for (auto& inst : out.instances)
      inst.features = {static_cast<double>(inst.form_day)};
    return out;
  }
  std::vector<std::string> users = sorted_users(xs);
  out.feature_dim = static_cast<int>(users.size());
  for (auto& inst : out.instances) {
    std::vector<double> onehot(users.size(), 0.0);
    auto it = std::lower_bound(users.begin(), users.end(), inst.user_id);
    onehot[static_cast<std::size_t>(it - users.begin())] = 1.0;
    inst.features = std::move(onehot);
  }
  return out;
}

}  // namespace moodbench
