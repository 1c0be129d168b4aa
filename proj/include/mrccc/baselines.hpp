#pragma once

#include <map>
#include <optional>
#include <string>

#include "mrccc/gibbs.hpp"
#include "mrccc/model.hpp"

namespace mrccc {

enum class Method { OLS, MVMR, MRBMA, MRCCC };

std::string to_string(Method m);
Method parse_method(const std::string& s);

inline constexpr double kFrequentistAlpha = 0.05;
inline constexpr double kBayesianThreshold = 0.5;

/// Common output contract of every estimator. `score` lies in [0, 1];
/// frequentist scores are 1 - p. beta_XZ_hat is empty for methods that do not
/// model the interaction.
struct MethodResult {
  Method method = Method::OLS;
  double score = 0.0;
  bool decision = false;
  double beta_X_hat = 0.0;
  std::optional<double> beta_XZ_hat;
  std::map<std::string, double> extras;
};

/// Decision rules: p <= 0.05 for frequentist methods (score = 1 - p), strict
/// score > 0.5 for Bayesian ones.
bool frequentist_decision(double p_value);
bool bayesian_decision(double score);
bool decision_consistent(const MethodResult& r);

/// y on [1, x, z, x*z, V] with a joint F test of beta_X = beta_XZ = 0.
MethodResult fit_ols(const Dataset& d);

/// Two-stage: x and z each on [1, G, H, V]; y on [1, x_hat, z_hat, V];
/// t test of beta_X = 0 with conventional second-stage standard errors.
MethodResult fit_mvmr(const Dataset& d);

struct MrBmaOptions {
  /// g-prior scale; <= 0 selects min(J^2, 100) for J instruments.
  double g = 0.0;
  /// Add V to the per-instrument summary regressions.
  bool summary_covariates = false;
  /// Integrate the residual variance out of the weighted regression. When
  /// false the weighted residual variance is fixed at 1.
  bool profile_variance = false;
};

/// Per-instrument association estimates for exposures and outcome.
struct SummaryStatistics {
  VectorXd beta_x;
  VectorXd beta_z;
  VectorXd beta_y;
  VectorXd se_y;
};

SummaryStatistics instrument_summaries(const Dataset& d,
                                       bool include_covariates = false);

/// Model posterior probabilities in the order {}, {X}, {Z}, {X, Z}.
struct MrBmaFit {
  double g = 0.0;
  double model_prob[4] = {0.0, 0.0, 0.0, 0.0};
  double mip_x = 0.0;
  double mip_z = 0.0;
  double mace_x = 0.0;
  double mace_z = 0.0;
};

MrBmaFit mrbma_from_summaries(const SummaryStatistics& s, double g = 0.0,
                              bool profile_variance = false);

MethodResult fit_mrbma(const Dataset& d, const MrBmaOptions& opt = {});

/// Centers the data, runs the sampler and reports PIP as the score. The full
/// posterior summary (with draws if requested) is copied to `posterior`.
MethodResult fit_mrccc(const Dataset& d, const Hyperparams& h,
                       const McmcSettings& mcmc,
                       PosteriorSummary* posterior = nullptr);

}  // namespace mrccc
