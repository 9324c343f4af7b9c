#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "moodbench/types.hpp"

namespace moodbench {

inline Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B, double gamma) {
  Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd K = -2.0 * (A * B.transpose());
  K.colwise() += a2;
  K.rowwise() += b2.transpose();
  return (-gamma * K.array()).exp();
}

/// Soft-margin C-SVM with an RBF kernel, trained in the dual by sequential
/// minimal optimization. Labels are {0, 1} at the interface and mapped to
/// +/-1 internally. A single-class training set yields a degenerate model
/// that always predicts that class (flagged).
class SvmRbf {
 public:
  struct Params {
    double C = 1.0;
    double gamma = 1.0;
    double tol = 1e-3;       // KKT tolerance
    int max_passes = 10;     // consecutive no-change sweeps before stopping
    int max_total_passes = 2000;
  };

  static SvmRbf fit(const Eigen::MatrixXd& X, const std::vector<int>& y01,
                    const Params& params) {
    if (X.rows() == 0 || static_cast<std::size_t>(X.rows()) != y01.size())
      throw PreconditionError("SvmRbf::fit: empty or mismatched inputs");
    if (params.C <= 0.0 || params.gamma <= 0.0)
      throw PreconditionError("SvmRbf::fit: C and gamma must be > 0");

    SvmRbf model;
    model.gamma_ = params.gamma;
    model.x_ = X;

    const int n = static_cast<int>(X.rows());
    model.y_.resize(n);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      model.y_[i] = y01[i] == 1 ? 1.0 : -1.0;
      pos += y01[i] == 1;
    }
    if (pos == 0 || pos == n) {
      model.degenerate_ = true;
      model.degenerate_class_ = pos == n ? 1 : 0;
      return model;
    }

    model.alpha_ = Eigen::VectorXd::Zero(n);
    model.b_ = 0.0;
    model.smo(params);
    return model;
  }

  double decision(const Eigen::RowVectorXd& x) const {
    if (degenerate_) return degenerate_class_ == 1 ? 1.0 : -1.0;
    double f = b_;
    for (int i = 0; i < x_.rows(); ++i) {
      if (alpha_[i] == 0.0) continue;
      f += alpha_[i] * y_[i] * std::exp(-gamma_ * (x_.row(i) - x).squaredNorm());
    }
    return f;
  }

  int predict(const Eigen::RowVectorXd& x) const {
    return decision(x) >= 0.0 ? 1 : 0;
  }

  bool degenerate() const { return degenerate_; }

  /// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
  double dual_objective() const {
    if (degenerate_) return 0.0;
    Eigen::MatrixXd K = rbf_kernel(x_, x_, gamma_);
    Eigen::VectorXd ay = alpha_.cwiseProduct(y_);
    return alpha_.sum() - 0.5 * ay.dot(K * ay);
  }

  /// Worst KKT violation over the training points, for verification:
  /// alpha=0 wants y f >= 1, 0<alpha<C wants y f = 1, alpha=C wants y f <= 1.
  double max_kkt_residual(double C) const {
    if (degenerate_) return 0.0;
    Eigen::MatrixXd K = rbf_kernel(x_, x_, gamma_);
    Eigen::VectorXd ay = alpha_.cwiseProduct(y_);
    Eigen::VectorXd f = K * ay;
    f.array() += b_;
    double worst = 0.0;
    for (int i = 0; i < alpha_.size(); ++i) {
      double margin = y_[i] * f[i];
      double r = 0.0;
      if (alpha_[i] <= 0.0)
        r = std::max(0.0, 1.0 - margin);
      else if (alpha_[i] >= C)
        r = std::max(0.0, margin - 1.0);
      else
        r = std::abs(1.0 - margin);
      worst = std::max(worst, r);
    }
    return worst;
  }

  const Eigen::VectorXd& alpha() const { return alpha_; }
  double bias() const { return b_; }

 private:
  void smo(const Params& params) {
    const int n = static_cast<int>(x_.rows());
    k_ = rbf_kernel(x_, x_, gamma_);
    // Full error cache E_i = f(x_i) - y_i, updated after every step.
    err_ = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) err_[i] = -y_[i];

    int clean_passes = 0;
    int total_passes = 0;
    while (clean_passes < params.max_passes &&
           total_passes < params.max_total_passes) {
      int changed = 0;
      for (int i = 0; i < n; ++i) {
        const double r = y_[i] * err_[i];
        const bool violates = (r < -params.tol && alpha_[i] < params.C) ||
                              (r > params.tol && alpha_[i] > 0.0);
        if (!violates) continue;

        // Second-choice heuristic: largest |E_i - E_j| first, then a
        // deterministic scan over the remaining candidates.
        int j_best = -1;
        double gap = -1.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          double g = std::abs(err_[i] - err_[j]);
          if (g > gap) {
            gap = g;
            j_best = j;
          }
        }
        if (j_best >= 0 && take_step(i, j_best, params)) {
          ++changed;
          continue;
        }
        for (int off = 1; off < n; ++off) {
          int j = (i + off) % n;
          if (j == j_best) continue;
          if (take_step(i, j, params)) {
            ++changed;
            break;
          }
        }
      }
      clean_passes = changed == 0 ? clean_passes + 1 : 0;
      ++total_passes;
    }
  }

  bool take_step(int i1, int i2, const Params& params) {
    if (i1 == i2) return false;
    const double C = params.C;
    const double a1_old = alpha_[i1], a2_old = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = err_[i1], e2 = err_[i2];
    const double s = y1 * y2;

    double lo, hi;
    if (s < 0.0) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(C, C + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - C);
      hi = std::min(C, a1_old + a2_old);
    }
    if (lo >= hi) return false;

    const double k11 = k_(i1, i1), k22 = k_(i2, i2), k12 = k_(i1, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2;
    if (eta > 0.0) {
      a2 = a2_old + y2 * (e1 - e2) / eta;
      a2 = std::min(hi, std::max(lo, a2));
    } else {
      // Flat direction: evaluate the objective at both clip ends.
      // err_ includes b, the pairwise objective wants the raw margin part.
      const double f1 = y1 * (e1 - b_) - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * (e2 - b_) - a2_old * k22 - s * a1_old * k12;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      double lobj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                    s * lo * l1 * k12;
      double hobj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                    s * hi * h1 * k12;
      if (lobj < hobj - 1e-12)
        a2 = lo;
      else if (lobj > hobj + 1e-12)
        a2 = hi;
      else
        return false;
    }
    if (std::abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12)) return false;
    const double a1 = a1_old + s * (a2_old - a2);

    const double d1 = a1 - a1_old, d2 = a2 - a2_old;
    const double b1 = b_ - e1 - y1 * d1 * k11 - y2 * d2 * k12;
    const double b2 = b_ - e2 - y1 * d1 * k12 - y2 * d2 * k22;
    double b_new;
    if (a1 > 0.0 && a1 < C)
      b_new = b1;
    else if (a2 > 0.0 && a2 < C)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);

    const double db = b_new - b_;
    for (int k = 0; k < err_.size(); ++k)
      err_[k] += y1 * d1 * k_(i1, k) + y2 * d2 * k_(i2, k) + db;

    alpha_[i1] = a1;
    alpha_[i2] = a2;
    b_ = b_new;
    return true;
  }

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;       // +/-1
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd k_;       // training kernel, only alive during fit
  Eigen::VectorXd err_;
  double b_ = 0.0;
  double gamma_ = 1.0;
  bool degenerate_ = false;
  int degenerate_class_ = 0;
};

}  // namespace moodbench
