#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

namespace mrccc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Donor-level analysis record. Rows of every block are donors.
///
/// G and H hold instrument dosages for the ligand (x) and receptor (z)
/// exposures; V holds observed covariates and may have zero columns. y is the
/// receiver-side pathway activity.
struct Dataset {
  MatrixXd G;
  MatrixXd H;
  MatrixXd V;
  VectorXd x;
  VectorXd z;
  VectorXd y;

  Eigen::Index n() const { return x.size(); }
  Eigen::Index p_G() const { return G.cols(); }
  Eigen::Index p_H() const { return H.cols(); }
  Eigen::Index p_V() const { return V.cols(); }

  /// Throws ValidationError naming the block, row and column of the first
  /// violation (shape mismatch, n < 2, missing instruments, non-finite entry).
  void validate() const;

  bool operator==(const Dataset& other) const;
};

/// Column means removed by center_dataset, kept so raw-scale values can be
/// recovered.
struct DatasetMeans {
  VectorXd G;
  VectorXd H;
  VectorXd V;
  double x = 0.0;
  double z = 0.0;
  double y = 0.0;
};

struct CenteredDataset {
  Dataset data;
  DatasetMeans means;
};

CenteredDataset center_dataset(const Dataset& d);

/// Generative parameters of the three-equation structural model.
struct StructuralParams {
  VectorXd pi_X;
  VectorXd pi_Z;
  VectorXd alpha_X;
  VectorXd alpha_Z;
  VectorXd alpha_Y;
  double lambda_X = 0.0;
  double lambda_Z = 0.0;
  double lambda_Y = 0.0;
  double beta_X = 0.0;
  double beta_Z = 0.0;
  double beta_XZ = 0.0;
  double sigma2_X = 1.0;
  double sigma2_Z = 1.0;
  double sigma2_Y = 1.0;
  int gamma = 0;

  void validate() const;
};

/// Communication indicator implied by the effect pair: 0 iff both are zero.
int communication_indicator(double beta_X, double beta_XZ);

struct EffectSummary {
  double beta_X_hat = 0.0;
  double beta_Z_hat = 0.0;
  double beta_XZ_hat = 0.0;
  double beta_X_std = 0.0;
  double beta_XZ_std = 0.0;
  double sd_x = 1.0;
  double sd_z = 1.0;
  double sd_y = 1.0;
};

/// Sample standard deviation with denominator n - 1.
double sample_sd(const VectorXd& v);

EffectSummary standardize_effects(double beta_X, double beta_Z, double beta_XZ,
                                  const VectorXd& x, const VectorXd& z,
                                  const VectorXd& y);

/// Build a summary directly from known scales (used when the SDs are reported
/// rather than recomputed).
EffectSummary standardize_effects(double beta_X, double beta_Z, double beta_XZ,
                                  double sd_x, double sd_z, double sd_y);

/// Receptor level (SD units) where beta_X_std + beta_XZ_std * z changes sign.
/// std::nullopt means unbounded: the interaction is numerically zero, so the
/// ligand effect never reverses.
using SignReversal = std::optional<double>;

inline constexpr double kUnboundedInteractionTol = 1e-12;

SignReversal sign_reversal_threshold(const EffectSummary& e);

VectorXd effect_curve(const EffectSummary& e, std::span<const double> z_grid);

}  // namespace mrccc
