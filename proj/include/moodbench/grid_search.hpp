#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "moodbench/krr.hpp"
#include "moodbench/rng.hpp"
#include "moodbench/svm.hpp"
#include "moodbench/types.hpp"

namespace moodbench {

/// Picks the best of `n_points` by a caller-supplied score, breaking ties in
/// favour of the earliest point in declared grid order.
template <typename Score>
std::size_t best_grid_index(std::size_t n_points, bool maximize, Score&& score) {
  if (n_points == 0) throw PreconditionError("grid search over an empty grid");
  std::size_t best = 0;
  double best_score = maximize ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n_points; ++p) {
    double s = score(p);
    bool better = maximize ? s > best_score : s < best_score;
    if (better) {
      best_score = s;
      best = p;
    }
  }
  return best;
}

struct SvmHyper {
  double C = 1.0;
  double gamma = 1.0;
};

/// Inner k-fold grid search on the training portion only; classification is
/// scored by pooled accuracy. Grid order is C outer, gamma inner.
inline SvmHyper svm_grid_search(const Eigen::MatrixXd& X,
                                const std::vector<int>& y,
                                const std::vector<double>& c_grid,
                                const std::vector<double>& gamma_grid,
                                int inner_k = 3, std::uint64_t seed = 0) {
  if (c_grid.empty() || gamma_grid.empty())
    throw PreconditionError("svm_grid_search: empty grid");
  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<SvmHyper> points;
  for (double c : c_grid)
    for (double g : gamma_grid) points.push_back({c, g});
  if (n < 2) return points.front();

  const int k = std::min<int>(inner_k, static_cast<int>(n));
  const std::vector<int> fold = fold_assignment(n, k, seed);

  auto score = [&](std::size_t p) {
    int correct = 0;
    for (int f = 0; f < k; ++f) {
      std::vector<int> train, val;
      for (std::size_t i = 0; i < n; ++i)
        (fold[i] == f ? val : train).push_back(static_cast<int>(i));
      Eigen::MatrixXd Xtr(train.size(), X.cols());
      std::vector<int> ytr(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) {
        Xtr.row(r) = X.row(train[r]);
        ytr[r] = y[train[r]];
      }
      SvmRbf::Params params;
      params.C = points[p].C;
      params.gamma = points[p].gamma;
      SvmRbf model = SvmRbf::fit(Xtr, ytr, params);
      for (int i : val) correct += model.predict(X.row(i)) == y[i];
    }
    return static_cast<double>(correct) / static_cast<double>(n);
  };
  return points[best_grid_index(points.size(), /*maximize=*/true, score)];
}

struct KrrHyper {
  double lambda = 1.0;
  double gamma = 1.0;
};

/// Same scheme for the regressor, scored by pooled inner-CV MSE (minimized).
/// Grid order is lambda outer, gamma inner.
inline KrrHyper krr_grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<double>& lambda_grid,
                                const std::vector<double>& gamma_grid,
                                int inner_k = 3, std::uint64_t seed = 0) {
  if (lambda_grid.empty() || gamma_grid.empty())
    throw PreconditionError("krr_grid_search: empty grid");
  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<KrrHyper> points;
  for (double l : lambda_grid)
    for (double g : gamma_grid) points.push_back({l, g});
  if (n < 2) return points.front();

  const int k = std::min<int>(inner_k, static_cast<int>(n));
  const std::vector<int> fold = fold_assignment(n, k, seed);

  auto score = [&](std::size_t p) {
    double sq = 0.0;
    for (int f = 0; f < k; ++f) {
      std::vector<int> train, val;
      for (std::size_t i = 0; i < n; ++i)
        (fold[i] == f ? val : train).push_back(static_cast<int>(i));
      Eigen::MatrixXd Xtr(train.size(), X.cols());
      Eigen::VectorXd ytr(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) {
        Xtr.row(r) = X.row(train[r]);
        ytr[r] = y[train[r]];
      }
      KrrRbf model = KrrRbf::fit(Xtr, ytr, points[p].lambda, points[p].gamma);
      for (int i : val) {
        double r = model.predict(X.row(i)) - y[i];
        sq += r * r;
      }
    }
    return sq / static_cast<double>(n);
  };
  return points[best_grid_index(points.size(), /*maximize=*/false, score)];
}

}  // namespace moodbench
