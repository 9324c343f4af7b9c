#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "moodbench/csv_io.hpp"
#include "moodbench/instances.hpp"
#include "moodbench/rng.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

/// Leave-one-user-out: one fold per user (sorted order), testing all of that
/// user's instances against a model trained on everyone else.
inline std::vector<Split> louocv_splits(const InstanceSet& xs) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < xs.instances.size(); ++i)
    by_user[xs.instances[i].user_id].push_back(i);
  if (by_user.size() < 2)
    throw PreconditionError("louocv_splits needs at least 2 users");
  std::vector<Split> splits;
  int fold = 0;
  for (const auto& [uid, test] : by_user) {
    Split s;
    s.protocol = Protocol::kLouocv;
    s.fold = fold++;
    s.test_indices = test;
    for (const auto& [other, idxs] : by_user)
      if (other != uid)
        s.train_indices.insert(s.train_indices.end(), idxs.begin(), idxs.end());
    std::sort(s.train_indices.begin(), s.train_indices.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

struct LoiocvPlan {
  std::vector<Split> splits;
  std::vector<std::string> skipped_users;  // users with a single instance
};

/// Leave-one-instance-out within each user: personalised models, train on the
/// user's remaining instances only. Users with one instance are skipped.
inline LoiocvPlan loiocv_splits(const InstanceSet& xs) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < xs.instances.size(); ++i)
    by_user[xs.instances[i].user_id].push_back(i);
  LoiocvPlan plan;
  int fold = 0;
  for (const auto& [uid, idxs] : by_user) {
    if (idxs.size() < 2) {
      plan.skipped_users.push_back(uid);
      continue;
    }
    for (std::size_t test : idxs) {
      Split s;
      s.protocol = Protocol::kLoiocv;
      s.fold = fold++;
      s.test_indices.push_back(test);
      for (std::size_t other : idxs)
        if (other != test) s.train_indices.push_back(other);
      plan.splits.push_back(std::move(s));
    }
  }
  return plan;
}

/// Randomised k-fold over the pooled instances of all users. Fold sizes are
/// near-equal; the first n % k folds take the extra instance.
inline std::vector<Split> mixed_kfold_splits(const InstanceSet& xs, int k,
                                             std::uint64_t seed) {
  const std::size_t n = xs.instances.size();
  if (k < 2) throw PreconditionError("mixed_kfold_splits needs k >= 2");
  if (n < static_cast<std::size_t>(k))
    throw PreconditionError("mixed_kfold_splits needs n >= k");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Split> splits;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t size = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
    Split s;
    s.protocol = Protocol::kMixed;
    s.fold = f;
    s.test_indices.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
    std::sort(s.test_indices.begin(), s.test_indices.end());
    splits.push_back(std::move(s));
  }
  for (int f = 0; f < k; ++f) {
    std::set<std::size_t> test(splits[f].test_indices.begin(),
                               splits[f].test_indices.end());
    for (std::size_t i = 0; i < n; ++i)
      if (!test.count(i)) splits[f].train_indices.push_back(i);
  }
  return splits;
}

inline int window_overlap_days(const Instance& a, const Instance& b) {
  int lo = std::max(a.window_start, b.window_start);
  int hi = std::min(a.window_end, b.window_end);
  return std::max(0, hi - lo + 1);
}

/// Quantifies the three leak channels for one split: test users present in
/// train, same-user feature-window overlap (fraction of the test window),
/// and prior-target columns used as features.
inline LeakageReport audit_split(const Split& split, const InstanceSet& xs) {
  LeakageReport rep;
  rep.protocol = split.protocol;
  rep.fold = split.fold;
  rep.target_leak = xs.n_lag_columns > 0;

  std::map<std::string, std::vector<std::size_t>> train_by_user;
  for (std::size_t i : split.train_indices)
    train_by_user[xs.instances[i].user_id].push_back(i);

  for (std::size_t t : split.test_indices) {
    const Instance& test = xs.instances[t];
    auto it = train_by_user.find(test.user_id);
    if (it == train_by_user.end()) continue;
    ++rep.user_overlap;
    const double test_len = test.window_end - test.window_start + 1;
    for (std::size_t tr : it->second) {
      double frac = window_overlap_days(xs.instances[tr], test) / test_len;
      rep.max_window_overlap = std::max(rep.max_window_overlap, frac);
    }
  }
  return rep;
}

inline std::string leakage_csv_header() {
  return "protocol,fold,user_overlap,max_window_overlap,target_leak";
}

inline std::string leakage_csv_row(const LeakageReport& r) {
  std::string row = protocol_name(r.protocol);
  row += ',';
  row += std::to_string(r.fold);
  row += ',';
  row += std::to_string(r.user_overlap);
  row += ',';
  row += format_double(r.max_window_overlap);
  row += ',';
  row += r.target_leak ? "true" : "false";
  return row;
}

}  // namespace moodbench
