#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "moodbench/rng.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

struct LinearModel {
  Eigen::VectorXd weights;  // per selected column
  double intercept = 0.0;
  std::vector<int> columns;  // columns of the full design the weights apply to

  double predict(const Eigen::RowVectorXd& x) const {
    double v = intercept;
    for (std::size_t j = 0; j < columns.size(); ++j) v += weights[j] * x[columns[j]];
    return v;
  }
};

/// Ridge least squares with an unpenalized intercept, solved exactly through
/// the normal equations. `columns` restricts the design to a feature subset;
/// empty weights (no columns) degrade to the intercept-only model.
inline LinearModel fit_linreg(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double ridge = 1e-6,
                              const std::vector<int>& columns = {}) {
  if (X.rows() == 0 || X.rows() != y.rows())
    throw PreconditionError("fit_linreg: empty or mismatched inputs");
  if (!X.allFinite() || !y.allFinite())
    throw PreconditionError("fit_linreg: non-finite inputs");
  if (ridge <= 0.0) throw PreconditionError("fit_linreg: ridge must be > 0");

  LinearModel model;
  model.columns = columns;
  if (model.columns.empty()) {
    // Empty subset means "all columns"; intercept-only fits go through
    // fit_intercept_only instead.
    model.columns.resize(X.cols());
    for (int j = 0; j < X.cols(); ++j) model.columns[j] = j;
  }

  const int d = static_cast<int>(model.columns.size());
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd A(n, d + 1);
  for (int j = 0; j < d; ++j) A.col(j) = X.col(model.columns[j]);
  A.col(d).setOnes();

  Eigen::MatrixXd G = A.transpose() * A;
  for (int j = 0; j < d; ++j) G(j, j) += ridge;  // intercept unpenalized
  Eigen::VectorXd sol = G.ldlt().solve(A.transpose() * y);
  model.weights = sol.head(d);
  model.intercept = sol[d];
  return model;
}

/// Intercept-only fallback used when a subset is intentionally empty.
inline LinearModel fit_intercept_only(const Eigen::VectorXd& y) {
  LinearModel model;
  model.weights.resize(0);
  model.intercept = y.size() > 0 ? y.mean() : 0.0;
  return model;
}

namespace detail {

inline double cv_mse_for_subset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<int>& cols,
                                const std::vector<int>& fold, int k,
                                double ridge) {
  const int n = static_cast<int>(X.rows());
  double sq = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<int> train, val;
    for (int i = 0; i < n; ++i) (fold[i] == f ? val : train).push_back(i);
    if (train.empty() || val.empty()) continue;
    Eigen::MatrixXd Xtr(train.size(), X.cols());
    Eigen::VectorXd ytr(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      Xtr.row(r) = X.row(train[r]);
      ytr[r] = y[train[r]];
    }
    LinearModel m = cols.empty() ? fit_intercept_only(ytr)
                                 : fit_linreg(Xtr, ytr, ridge, cols);
    for (int i : val) {
      double r = m.predict(X.row(i)) - y[i];
      sq += r * r;
    }
  }
  return sq / static_cast<double>(n);
}

}  // namespace detail

/// Greedy sequential forward selection driven by inner k-fold CV MSE of the
/// ridge model. Stops when no candidate improves the CV MSE by more than
/// 1e-9 or when max_features is reached. Ties go to the lowest feature index.
/// The fold assignment is drawn once from `seed` and reused at every step.
inline std::vector<int> sfs_select(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y, int max_features,
                                   int inner_k = 5, std::uint64_t seed = 0,
                                   double ridge = 1e-6) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 2 || d == 0 || max_features <= 0) return {};
  const int k = std::min(inner_k, n);
  const std::vector<int> fold = fold_assignment(n, k, seed);

  std::vector<int> selected;
  std::vector<bool> used(d, false);
  double best = detail::cv_mse_for_subset(X, y, {}, fold, k, ridge);

  while (static_cast<int>(selected.size()) < std::min(max_features, d)) {
    int best_cand = -1;
    double best_cand_mse = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      if (used[j]) continue;
      std::vector<int> trial = selected;
      trial.push_back(j);
      double m = detail::cv_mse_for_subset(X, y, trial, fold, k, ridge);
      if (m < best_cand_mse) {
        best_cand_mse = m;
        best_cand = j;
      }
    }
    if (best_cand < 0 || best_cand_mse >= best - 1e-9) break;
    selected.push_back(best_cand);
    used[best_cand] = true;
    best = best_cand_mse;
  }
  return selected;
}

}  // namespace moodbench
