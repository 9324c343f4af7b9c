#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "moodbench/svm.hpp"  // rbf_kernel
#include "moodbench/types.hpp"

namespace moodbench {

/// Kernel ridge regression with an RBF kernel: coef = (K + lambda I)^-1 y,
/// prediction k(x, .)' coef. Closed-form and deterministic.
class KrrRbf {
 public:
  static KrrRbf fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    double lambda, double gamma) {
    if (X.rows() == 0 || X.rows() != y.rows())
      throw PreconditionError("KrrRbf::fit: empty or mismatched inputs");
    if (lambda <= 0.0 || gamma <= 0.0)
      throw PreconditionError("KrrRbf::fit: lambda and gamma must be > 0");
    KrrRbf model;
    model.x_ = X;
    model.gamma_ = gamma;
    Eigen::MatrixXd K = rbf_kernel(X, X, gamma);
    if (!K.allFinite()) throw PreconditionError("KrrRbf::fit: non-finite kernel");
    K.diagonal().array() += lambda;
    model.coef_ = K.ldlt().solve(y);
    return model;
  }

  double predict(const Eigen::RowVectorXd& x) const {
    double v = 0.0;
    for (int i = 0; i < x_.rows(); ++i)
      v += coef_[i] * std::exp(-gamma_ * (x_.row(i) - x).squaredNorm());
    return v;
  }

  Eigen::VectorXd predict_all(const Eigen::MatrixXd& X) const {
    return rbf_kernel(X, x_, gamma_) * coef_;
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd coef_;
  double gamma_ = 1.0;
};

}  // namespace moodbench
