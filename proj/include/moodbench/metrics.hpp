#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moodbench/types.hpp"

namespace moodbench {

enum class Grouping { kGlobal, kPerUser };

/// A metric value; std::nullopt means the metric is undefined for this pool
/// (zero denominator) and is reported as the literal token NA, never as 0.
struct MetricResult {
  std::string name;
  std::optional<double> value;
  Grouping grouping = Grouping::kGlobal;
  std::size_t n = 0;
};

inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b || a == 0)
    throw PreconditionError("prediction/truth lengths mismatch or empty");
}

inline double mse(const std::vector<double>& preds,
                  const std::vector<double>& truths) {
  check_lengths(preds.size(), truths.size());
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double r = preds[i] - truths[i];
    s += r * r;
  }
  return s / static_cast<double>(preds.size());
}

inline double rmse(const std::vector<double>& preds,
                   const std::vector<double>& truths) {
  return std::sqrt(mse(preds, truths));
}

/// R^2 with a grouping-dependent baseline: GLOBAL uses the pooled mean of the
/// truths; PER_USER uses each instance's own user's mean within the
/// evaluation pool. The choice flips conclusions on user-biased models, which
/// is why it is explicit here.
inline std::optional<double> r2_grouped(const std::vector<double>& preds,
                                        const std::vector<double>& truths,
                                        const std::vector<std::string>& user_of,
                                        Grouping grouping) {
  check_lengths(preds.size(), truths.size());
  check_lengths(preds.size(), user_of.size());

  std::map<std::string, std::pair<double, int>> per_user;  // sum, count
  double global_sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    global_sum += truths[i];
    auto& [sum, cnt] = per_user[user_of[i]];
    sum += truths[i];
    cnt += 1;
  }
  if (grouping == Grouping::kPerUser) {
    for (const auto& [uid, sc] : per_user)
      if (sc.second < 2)
        throw PreconditionError("r2_grouped PER_USER: user '" + uid +
                                "' has fewer than 2 instances");
  }
  const double global_mean = global_sum / static_cast<double>(truths.size());

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    double r = preds[i] - truths[i];
    num += r * r;
    double base = grouping == Grouping::kGlobal
                      ? global_mean
                      : per_user[user_of[i]].first / per_user[user_of[i]].second;
    double d = truths[i] - base;
    den += d * d;
  }
  if (den == 0.0) return std::nullopt;
  return 1.0 - num / den;
}

/// Classification-style accuracy for a regressor: assume n_classes over the
/// declared range, class width w = (hi - lo) / n_classes, and count a
/// prediction correct iff its squared error is strictly below (w/2)^2. On a
/// unit-spaced 5-class scale this reduces to the familiar 0.25 threshold.
inline double likamwa_accuracy(const std::vector<double>& preds,
                               const std::vector<double>& truths,
                               TargetRange range, int n_classes = 5) {
  check_lengths(preds.size(), truths.size());
  if (range.hi <= range.lo) throw PreconditionError("degenerate target range");
  const double w = (range.hi - range.lo) / static_cast<double>(n_classes);
  const double e = (w / 2.0) * (w / 2.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double r = preds[i] - truths[i];
    if (r * r < e) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

struct SensSpec {
  std::optional<double> sensitivity;  // TP / (TP + FN); nullopt if no positives
  std::optional<double> specificity;  // TN / (TN + FP); nullopt if no negatives
};

inline SensSpec sensitivity_specificity(const std::vector<int>& preds,
                                        const std::vector<int>& truths) {
  check_lengths(preds.size(), truths.size());
  int tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] == 1)
      preds[i] == 1 ? ++tp : ++fn;
    else
      preds[i] == 0 ? ++tn : ++fp;
  }
  SensSpec out;
  if (tp + fn > 0) out.sensitivity = static_cast<double>(tp) / (tp + fn);
  if (tn + fp > 0) out.specificity = static_cast<double>(tn) / (tn + fp);
  return out;
}

inline double accuracy(const std::vector<int>& preds,
                       const std::vector<int>& truths) {
  check_lengths(preds.size(), truths.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truths[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

}  // namespace moodbench
