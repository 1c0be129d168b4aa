#include "mrccc/model.hpp"

#include <cmath>
#include <string>

#include "mrccc/errors.hpp"

namespace mrccc {
namespace {

void check_finite(const MatrixXd& m, const char* block) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw ValidationError(std::string("non-finite entry in ") + block +
                              " at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
}

void check_rows(Eigen::Index rows, Eigen::Index n, const char* block) {
  if (rows != n) {
    throw ValidationError(std::string(block) + " has " + std::to_string(rows) +
                          " rows, expected " + std::to_string(n));
  }
}

}  // namespace

void Dataset::validate() const {
  const Eigen::Index rows = n();
  if (rows < 2) throw ValidationError("dataset needs at least 2 donors");
  check_rows(G.rows(), rows, "G");
  check_rows(H.rows(), rows, "H");
  check_rows(V.rows(), rows, "V");
  check_rows(z.size(), rows, "z");
  check_rows(y.size(), rows, "y");
  if (G.cols() < 1) throw ValidationError("G needs at least one instrument");
  if (H.cols() < 1) throw ValidationError("H needs at least one instrument");
  check_finite(G, "G");
  check_finite(H, "H");
  check_finite(V, "V");
  check_finite(x, "x");
  check_finite(z, "z");
  check_finite(y, "y");
}

bool Dataset::operator==(const Dataset& o) const {
  auto same = [](const MatrixXd& a, const MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(G, o.G) && same(H, o.H) && same(V, o.V) && same(x, o.x) &&
         same(z, o.z) && same(y, o.y);
}

CenteredDataset center_dataset(const Dataset& d) {
  d.validate();
  CenteredDataset out{d, {}};
  auto center_cols = [](MatrixXd& m) {
    VectorXd means = m.colwise().mean().transpose();
    m.rowwise() -= means.transpose();
    return means;
  };
  auto center_vec = [](VectorXd& v) {
    const double mean = v.mean();
    v.array() -= mean;
    return mean;
  };
  out.means.G = center_cols(out.data.G);
  out.means.H = center_cols(out.data.H);
  out.means.V = center_cols(out.data.V);
  out.means.x = center_vec(out.data.x);
  out.means.z = center_vec(out.data.z);
  out.means.y = center_vec(out.data.y);
  return out;
}

void StructuralParams::validate() const {
  if (!(sigma2_X > 0.0 && sigma2_Y > 0.0 && sigma2_Z > 0.0)) {
    throw ValidationError("structural variances must be strictly positive");
  }
  if (gamma != communication_indicator(beta_X, beta_XZ)) {
    throw ValidationError("gamma inconsistent with (beta_X, beta_XZ)");
  }
  if (alpha_X.size() != alpha_Z.size() || alpha_X.size() != alpha_Y.size()) {
    throw ValidationError("covariate effect vectors differ in length");
  }
}

int communication_indicator(double beta_X, double beta_XZ) {
  return (beta_X == 0.0 && beta_XZ == 0.0) ? 0 : 1;
}

double sample_sd(const VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n < 2) throw ValidationError("standard deviation needs n >= 2");
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() /
                   static_cast<double>(n - 1));
}

EffectSummary standardize_effects(double beta_X, double beta_Z,
                                  double beta_XZ, double sd_x, double sd_z,
                                  double sd_y) {
  if (!(sd_y > 0.0)) {
    throw ValidationError("outcome has zero variance; cannot standardize");
  }
  EffectSummary e;
  e.beta_X_hat = beta_X;
  e.beta_Z_hat = beta_Z;
  e.beta_XZ_hat = beta_XZ;
  e.sd_x = sd_x;
  e.sd_z = sd_z;
  e.sd_y = sd_y;
  e.beta_X_std = beta_X * sd_x / sd_y;
  e.beta_XZ_std = beta_XZ * sd_x * sd_z / sd_y;
  return e;
}

EffectSummary standardize_effects(double beta_X, double beta_Z,
                                  double beta_XZ, const VectorXd& x,
                                  const VectorXd& z, const VectorXd& y) {
  if (x.size() != y.size() || z.size() != y.size()) {
    throw ValidationError("x, z, y lengths differ");
  }
  return standardize_effects(beta_X, beta_Z, beta_XZ, sample_sd(x),
                             sample_sd(z), sample_sd(y));
}

SignReversal sign_reversal_threshold(const EffectSummary& e) {
  if (std::abs(e.beta_XZ_std) < kUnboundedInteractionTol) return std::nullopt;
  return -e.beta_X_std / e.beta_XZ_std;
}

VectorXd effect_curve(const EffectSummary& e, std::span<const double> z_grid) {
  VectorXd out(static_cast<Eigen::Index>(z_grid.size()));
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = e.beta_X_std + e.beta_XZ_std * z_grid[i];
  }
  return out;
}

}  // namespace mrccc
