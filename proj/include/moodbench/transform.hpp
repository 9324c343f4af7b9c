#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "moodbench/types.hpp"

namespace moodbench {

/// One user's (day, value) stream, days strictly increasing.
struct LabeledSeries {
  std::string user_id;
  std::vector<std::pair<int, double>> points;

  void validate() const {
    if (points.empty()) throw PreconditionError("series is empty");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].first <= points[i - 1].first)
        throw PreconditionError("series days must be strictly increasing for " +
                                user_id);
  }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation.
inline double pop_std(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

/// Trailing (causal) moving average over calendar days [t - window + 1, t];
/// days with no observation are simply skipped. Output days == input days.
inline LabeledSeries moving_average_filter(const LabeledSeries& s, int window = 14) {
  s.validate();
  if (window < 1) throw PreconditionError("window must be >= 1");
  LabeledSeries out;
  out.user_id = s.user_id;
  out.points.reserve(s.points.size());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const int t = s.points[i].first;
    while (s.points[lo].first < t - window + 1) ++lo;
    double sum = 0.0;
    for (std::size_t j = lo; j <= i; ++j) sum += s.points[j].second;
    out.points.emplace_back(t, sum / static_cast<double>(i - lo + 1));
  }
  return out;
}

/// Subtracts the per-user mean of the same weekday (day mod 7 from the
/// dataset epoch) to remove cyclic weekly trends.
inline LabeledSeries weekday_detrend(const LabeledSeries& s) {
  s.validate();
  std::array<double, 7> sum{};
  std::array<int, 7> cnt{};
  for (const auto& [day, v] : s.points) {
    sum[day % 7] += v;
    cnt[day % 7] += 1;
  }
  LabeledSeries out;
  out.user_id = s.user_id;
  out.points.reserve(s.points.size());
  for (const auto& [day, v] : s.points)
    out.points.emplace_back(day, v - sum[day % 7] / cnt[day % 7]);
  return out;
}

/// Label 1 iff the value is strictly above mean + one population std of the
/// user's series. A constant series (std 0) yields all zeros.
inline std::vector<std::pair<int, int>> binarize_one_std(const LabeledSeries& s) {
  s.validate();
  if (s.points.size() < 2)
    throw PreconditionError("binarize_one_std needs a series of length >= 2");
  std::vector<double> values;
  values.reserve(s.points.size());
  for (const auto& [day, v] : s.points) values.push_back(v);
  const double mean = detail::mean_of(values);
  const double sd = detail::pop_std(values, mean);
  std::vector<std::pair<int, int>> labels;
  labels.reserve(s.points.size());
  for (const auto& [day, v] : s.points)
    labels.emplace_back(day, v > mean + sd ? 1 : 0);
  return labels;
}

/// Per-user z-scoring over ALL of the user's instances. This is the biased
/// normalization probe: statistics intentionally include every instance,
/// test ones included. Zero-variance dims map to 0.
inline InstanceSet per_user_zscore(const InstanceSet& xs) {
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < xs.instances.size(); ++i)
    by_user[xs.instances[i].user_id].push_back(i);
  for (const auto& [uid, idxs] : by_user)
    if (idxs.size() < 2)
      throw PreconditionError("per_user_zscore: user '" + uid +
                              "' has fewer than 2 instances");
  InstanceSet out = xs;
  const int d = xs.feature_dim;
  for (const auto& [uid, idxs] : by_user) {
    for (int j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i : idxs) mean += xs.instances[i].features[j];
      mean /= static_cast<double>(idxs.size());
      double var = 0.0;
      for (std::size_t i : idxs) {
        double dlt = xs.instances[i].features[j] - mean;
        var += dlt * dlt;
      }
      double sd = std::sqrt(var / static_cast<double>(idxs.size()));
      for (std::size_t i : idxs) {
        double& v = out.instances[i].features[j];
        v = sd > 0.0 ? (xs.instances[i].features[j] - mean) / sd : 0.0;
      }
    }
  }
  return out;
}

/// Per-dimension mean/std fitted on `train` only, applied to `apply_to`.
/// The leak-free counterpart of per_user_zscore.
inline InstanceSet train_fitted_zscore(const InstanceSet& train,
                                       const InstanceSet& apply_to) {
  if (train.instances.empty())
    throw PreconditionError("train_fitted_zscore: empty train set");
  const int d = train.feature_dim;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& inst : train.instances)
    for (int j = 0; j < d; ++j) mean[j] += inst.features[j];
  for (int j = 0; j < d; ++j) mean[j] /= static_cast<double>(train.instances.size());
  for (const auto& inst : train.instances)
    for (int j = 0; j < d; ++j) {
      double dlt = inst.features[j] - mean[j];
      sd[j] += dlt * dlt;
    }
  for (int j = 0; j < d; ++j)
    sd[j] = std::sqrt(sd[j] / static_cast<double>(train.instances.size()));

  InstanceSet out = apply_to;
  for (auto& inst : out.instances)
    for (int j = 0; j < d; ++j)
      inst.features[j] = sd[j] > 0.0 ? (inst.features[j] - mean[j]) / sd[j] : 0.0;
  return out;
}

enum class BinMode { kUniq, kPers };

/// Top/bottom-fraction binary labelling. UNIQ pools all instances; PERS bins
/// each user's pool separately.
struct BinnedSet {
  std::vector<std::size_t> indices;  // into the source InstanceSet
  std::vector<int> labels;           // 1 = high, 0 = low, aligned with indices
  BinMode mode = BinMode::kUniq;
  double fraction = 0.3;
  std::vector<std::string> skipped_users;  // PERS pools smaller than 4
};

namespace detail {

// Sorts the pool by target, labels the bottom/top floor(fraction*n), and
// applies the tie rule: if the lowest high score equals the highest low
// score, every instance carrying that score is excluded from both classes.
inline void bin_pool(const InstanceSet& xs, const std::vector<std::size_t>& pool,
                     double fraction, BinnedSet& out) {
  std::vector<std::size_t> order = pool;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs.instances[a].target < xs.instances[b].target;
  });
  const std::size_t n = order.size();
  const std::size_t m = static_cast<std::size_t>(fraction * static_cast<double>(n));
  if (m == 0) return;
  const double low_max = xs.instances[order[m - 1]].target;
  const double high_min = xs.instances[order[n - m]].target;
  const bool tie = high_min == low_max;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t idx = order[i];
    if (tie && xs.instances[idx].target == low_max) continue;
    out.indices.push_back(idx);
    out.labels.push_back(0);
  }
  for (std::size_t i = n - m; i < n; ++i) {
    std::size_t idx = order[i];
    if (tie && xs.instances[idx].target == high_min) continue;
    out.indices.push_back(idx);
    out.labels.push_back(1);
  }
}

}  // namespace detail

inline BinnedSet bin_top_bottom(const InstanceSet& xs, double fraction = 0.3,
                                BinMode mode = BinMode::kUniq) {
  if (fraction <= 0.0 || fraction > 0.5)
    throw PreconditionError("bin fraction must lie in (0, 0.5]");
  BinnedSet out;
  out.mode = mode;
  out.fraction = fraction;
  if (mode == BinMode::kUniq) {
    if (xs.instances.size() < 4)
      throw PreconditionError("bin_top_bottom: pool smaller than 4 instances");
    std::vector<std::size_t> pool(xs.instances.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    detail::bin_pool(xs, pool, fraction, out);
  } else {
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < xs.instances.size(); ++i)
      by_user[xs.instances[i].user_id].push_back(i);
    for (const auto& [uid, pool] : by_user) {
      if (pool.size() < 4) {
        out.skipped_users.push_back(uid);
        continue;
      }
      detail::bin_pool(xs, pool, fraction, out);
    }
  }
  // Keep a deterministic index order regardless of pool traversal.
  std::vector<std::size_t> perm(out.indices.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return out.indices[a] < out.indices[b];
  });
  BinnedSet sorted;
  sorted.mode = out.mode;
  sorted.fraction = out.fraction;
  sorted.skipped_users = out.skipped_users;
  for (std::size_t p : perm) {
    sorted.indices.push_back(out.indices[p]);
    sorted.labels.push_back(out.labels[p]);
  }
  return sorted;
}

}  // namespace moodbench
