#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/linalg.hpp"

using namespace mrccc;

TEST_SUITE("linalg") {

TEST_CASE("ridge_solve examples") {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  CHECK(ridge_solve(I, 0.0, I).isApprox(I));
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(0, 0) = 2;
  A(1, 1) = 3;
  const MatrixXd x = ridge_solve(A, 1.0, Eigen::Vector2d(1, 1));
  CHECK(x(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("ridge_solve agrees with an explicit inverse") {
  std::mt19937_64 g(7);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd M = testutil::randn(6, 6, g);
    const MatrixXd A = M * M.transpose() + MatrixXd::Identity(6, 6);
    const MatrixXd B = testutil::randn(6, 3, g);
    const MatrixXd want = (A + 0.1 * MatrixXd::Identity(6, 6)).inverse() * B;
    CHECK((ridge_solve(A, 0.1, B) - want).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ridge_solve reports the step on failure") {
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(0, 0) = -1;
  try {
    ridge_solve(A, 1e-6, MatrixXd::Identity(2, 2), "step11:beta");
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.step() == "step11:beta");
  }
}

TEST_CASE("ols and p-values") {
  std::mt19937_64 g(3);
  MatrixXd X(100, 3);
  X.col(0).setOnes();
  X.rightCols(2) = testutil::randn(100, 2, g);
  const VectorXd beta = Eigen::Vector3d(1, -2, 0.5);
  const VectorXd y = X * beta + 0.1 * testutil::randn(100, g);
  const OlsFit f = ols(X, y);
  CHECK(f.df == 97);
  const VectorXd naive = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  CHECK((f.coef - naive).cwiseAbs().maxCoeff() < 1e-10);
  const MatrixXd cov = f.sigma2 * (X.transpose() * X).inverse();
  CHECK((f.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(t_test_pvalue(1.959963984540054, 1e9) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(f_test_pvalue(0.0, 2, 10) == doctest::Approx(1.0));
  // P(F(2, inf) > x) = exp(-x)
  CHECK(f_test_pvalue(3.0, 2, 1e9) == doctest::Approx(std::exp(-3.0)).epsilon(1e-6));
}

TEST_CASE("ols rank deficiency names columns") {
  MatrixXd X(10, 3);
  X.col(0).setOnes();
  X.col(1) = VectorXd::LinSpaced(10, 0, 1);
  X.col(2) = 2.0 * X.col(1);
  try {
    ols(X, VectorXd::Ones(10));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("collinear") != std::string::npos);
  }
}

}  // TEST_SUITE
