#pragma once

#include <string>

#include <Eigen/Dense>

namespace mrccc {

/// Solves (A + lambda I) X = B for symmetric A via Cholesky,
/// without forming an inverse. Throws NumericalError tagged with `step` when
/// A + lambda I is not numerically positive definite.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& A, double lambda,
                            const Eigen::MatrixXd& B,
                            const std::string& step = "ridge_solve");

/// Ordinary least squares with classical standard errors.
struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;        // s^2 (X'X)^{-1}
  Eigen::VectorXd residuals;
  double rss = 0.0;
  double sigma2 = 0.0;        // rss / df
  Eigen::Index df = 0;        // n - p
};

/// Fits y on X by column-pivoted QR. Throws ValidationError listing the
/// dependent column indices when X is rank deficient.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
double t_test_pvalue(double t, double df);

/// Upper-tail p-value P(F(d1, d2) > f).
double f_test_pvalue(double f, double d1, double d2);

}  // namespace mrccc
