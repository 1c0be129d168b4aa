#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrccc/model.hpp"
#include "mrccc/rng.hpp"

namespace mrccc {

/// Prior constants. All g's share the default min(n, 100).
struct Hyperparams {
  double g_G = 100.0;
  double g_H = 100.0;
  double g_V = 100.0;
  double g_Z = 100.0;
  double g_beta = 100.0;
  double a_sigma = 3.0;
  double b_sigma = 2.0;
  double a_rho = 3.0;
  double b_rho = 1.0;
  double nu_1 = 1e-4;  // spike scale; must stay <= 0.01
  double ridge_lambda = 1e-6;

  static Hyperparams defaults(Eigen::Index n);
  void validate() const;
};

struct McmcSettings {
  int iterations = 20000;
  int burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 0;
  bool keep_draws = false;

  static McmcSettings benchmark(std::uint64_t seed = 0);
  static McmcSettings screening(std::uint64_t seed = 0);
  void validate() const;
};

/// Current values of every sampled quantity plus the plug-in designs.
/// X_star, Z_star and X_beta are functions of the exposure parameters and are
/// refreshed by recompute_plugins.
struct ChainState {
  VectorXd pi_X;
  VectorXd alpha_X;
  double sigma2_X = 1.0;
  VectorXd pi_Z;
  VectorXd alpha_Z;
  double sigma2_Z = 1.0;
  double mu = 0.0;
  VectorXd alpha_Y;
  double beta_Z = 0.0;
  double sigma2_Y = 1.0;
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();  // (beta_X, beta_XZ)
  int gamma = 1;
  double rho = 0.75;

  VectorXd X_star;
  VectorXd Z_star;
  MatrixXd X_beta;  // n x 2: [X*, X* o Z*]

  /// Slab scale multiplier: 1 when gamma = 1, nu_1 otherwise.
  double s_gamma(const Hyperparams& h) const { return gamma == 1 ? 1.0 : h.nu_1; }
};

/// Centered dataset plus cross-products reused every sweep.
struct SamplerData {
  explicit SamplerData(Dataset d);

  Dataset data;
  MatrixXd GtG;
  MatrixXd HtH;
  MatrixXd VtV;
};

struct GaussianConditional {
  VectorXd mean;
  MatrixXd cov;
};

struct InverseGammaConditional {
  double shape = 0.0;
  double scale = 0.0;
};

enum class ExposureSide { Ligand, Receptor };

// Full conditionals, one per sampler step. Pure functions of the state.
GaussianConditional instrument_effect_conditional(const ChainState& s,
                                                  const SamplerData& sd,
                                                  const Hyperparams& h,
                                                  ExposureSide side);  // steps 1, 4
GaussianConditional exposure_covariate_conditional(const ChainState& s,
                                                   const SamplerData& sd,
                                                   const Hyperparams& h,
                                                   ExposureSide side);  // steps 2, 5
InverseGammaConditional exposure_variance_conditional(const ChainState& s,
                                                      const SamplerData& sd,
                                                      const Hyperparams& h,
                                                      ExposureSide side);  // steps 3, 6
GaussianConditional intercept_conditional(const ChainState& s,
                                          const SamplerData& sd);  // step 7
GaussianConditional outcome_covariate_conditional(const ChainState& s,
                                                  const SamplerData& sd,
                                                  const Hyperparams& h);  // step 8
GaussianConditional receptor_effect_conditional(const ChainState& s,
                                                const SamplerData& sd,
                                                const Hyperparams& h);  // step 9
InverseGammaConditional outcome_variance_conditional(const ChainState& s,
                                                     const SamplerData& sd,
                                                     const Hyperparams& h);  // step 10
GaussianConditional communication_effect_conditional(const ChainState& s,
                                                     const SamplerData& sd,
                                                     const Hyperparams& h);  // step 11

/// Quadratic form beta' (X_beta' X_beta) beta used by the inclusion update.
double communication_quadratic(const ChainState& s);

/// Pr(gamma = 1 | beta, sigma2_Y, rho), evaluated in log space with
/// max-subtraction. Throws NumericalError if q < 0.
double inclusion_probability(double q, double sigma2_Y, double rho,
                             const Hyperparams& h);

VectorXd draw_gaussian(const GaussianConditional& c, Rng& rng,
                       const std::string& step);
double draw_inverse_gamma(const InverseGammaConditional& c, Rng& rng,
                          const std::string& step);

// Block updates in sweep order.
void update_exposure_block(ChainState& s, const SamplerData& sd,
                           const Hyperparams& h, ExposureSide side, Rng& rng);
void recompute_plugins(ChainState& s, const Dataset& d);
void update_outcome_nuisance(ChainState& s, const SamplerData& sd,
                             const Hyperparams& h, Rng& rng);
void update_communication_block(ChainState& s, const SamplerData& sd,
                                const Hyperparams& h, Rng& rng);

/// Starting point: exposure and covariate effects at g-shrunk least squares,
/// beta = 0, gamma = 1, rho at its prior mean, mu = 0, unit variances.
ChainState initial_state(const SamplerData& sd, const Hyperparams& h);

struct PosteriorDraw {
  int iteration = 0;
  double beta_X = 0.0;
  double beta_XZ = 0.0;
  double beta_Z = 0.0;
  double mu = 0.0;
  double sigma2_Y = 0.0;
  double rho = 0.0;
  int gamma = 0;
};

struct PosteriorSummary {
  double pip = 0.0;
  double mean_beta_X = 0.0;
  double mean_beta_XZ = 0.0;
  double mean_beta_Z = 0.0;
  int n_kept = 0;
  std::vector<PosteriorDraw> draws;  // filled when McmcSettings::keep_draws
};

/// Runs one chain on a centered dataset. Sweep order: ligand block (1-3),
/// receptor block (4-6), plug-in refresh, outcome nuisance (7-10),
/// communication block (11-13). Draws after burn_in are kept every `thin`
/// iterations; posterior means are model-averaged over kept draws.
PosteriorSummary run_chain(const Dataset& data, const Hyperparams& h,
                           const McmcSettings& mcmc);

}  // namespace mrccc
