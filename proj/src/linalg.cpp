#include "mrccc/linalg.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mrccc/errors.hpp"

namespace mrccc {

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& A, double lambda,
                            const Eigen::MatrixXd& B, const std::string& step) {
  if (A.rows() != A.cols() || A.rows() != B.rows()) {
    throw ValidationError(step + ": ridge_solve shape mismatch");
  }
  if (A.rows() == 0) return Eigen::MatrixXd(0, B.cols());
  Eigen::MatrixXd M = A;
  M.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(step, "matrix is not positive definite after ridge");
  }
  return llt.solve(B);
}

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw ValidationError("ols: X and y row counts differ");
  if (n <= p) throw ValidationError("ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    std::string cols;
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!cols.empty()) cols += ",";
      cols += std::to_string(qr.colsPermutation().indices()(k));
    }
    throw ValidationError("ols: design is rank deficient; collinear column(s) " +
                          cols);
  }
  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.residuals = y - X * fit.coef;
  fit.rss = fit.residuals.squaredNorm();
  fit.df = n - p;
  fit.sigma2 = fit.rss / static_cast<double>(fit.df);

  // (X'X)^{-1} = P R^{-1} R^{-T} P^T
  const Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Eigen::MatrixXd Rinv = Eigen::MatrixXd::Identity(p, p);
  R.triangularView<Eigen::Upper>().solveInPlace(Rinv);
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.cov = perm * inner * perm.transpose();
  fit.cov *= fit.sigma2;
  return fit;
}

double t_test_pvalue(double t, double df) {
  if (std::isnan(t)) return 1.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double f_test_pvalue(double f, double d1, double d2) {
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  boost::math::fisher_f dist(d1, d2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace mrccc
