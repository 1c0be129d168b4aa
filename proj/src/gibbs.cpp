#include "mrccc/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrccc/errors.hpp"
#include "mrccc/linalg.hpp"

namespace mrccc {
namespace {

MatrixXd row_scaled(const MatrixXd& A, const VectorXd& w) {
  return A.array().colwise() * w.array();
}

// Views the quantities that differ between the ligand and receptor sides.
struct ExposureView {
  const MatrixXd& instruments;
  const MatrixXd& instrument_gram;
  const VectorXd& exposure;
  const VectorXd& pi;
  const VectorXd& alpha;
  double sigma2;
  double g_instrument;
  VectorXd weight;        // w_X = beta_X + beta_XZ Z*  or  w_Z = beta_Z + beta_XZ X*
  VectorXd outcome_base;  // y - mu - (partner main effect) - V alpha_Y
};

ExposureView exposure_view(const ChainState& s, const SamplerData& sd,
                           const Hyperparams& h, ExposureSide side) {
  const Dataset& d = sd.data;
  VectorXd base = d.y.array() - s.mu;
  if (d.p_V() > 0) base -= d.V * s.alpha_Y;
  if (side == ExposureSide::Ligand) {
    base -= s.beta_Z * s.Z_star;
    VectorXd w = (s.beta(1) * s.Z_star).array() + s.beta(0);
    return {d.G, sd.GtG, d.x, s.pi_X, s.alpha_X, s.sigma2_X, h.g_G,
            std::move(w), std::move(base)};
  }
  base -= s.beta(0) * s.X_star;
  VectorXd w = (s.beta(1) * s.X_star).array() + s.beta_Z;
  return {d.H, sd.HtH, d.z, s.pi_Z, s.alpha_Z, s.sigma2_Z, h.g_H,
          std::move(w), std::move(base)};
}

// Gaussian with precision `prec` (ridge added) and linear term `lin`.
GaussianConditional from_precision(const MatrixXd& prec, const VectorXd& lin,
                                   double lambda, const std::string& step) {
  const Eigen::Index p = prec.rows();
  GaussianConditional c;
  c.cov = ridge_solve(prec, lambda, MatrixXd::Identity(p, p), step);
  c.mean = c.cov * lin;
  return c;
}

VectorXd outcome_residual_without_beta(const ChainState& s, const Dataset& d) {
  // y - mu - beta_Z Z* - V alpha_Y
  VectorXd r = d.y.array() - s.mu;
  r -= s.beta_Z * s.Z_star;
  if (d.p_V() > 0) r -= d.V * s.alpha_Y;
  return r;
}

const char* side_step(ExposureSide side, int ligand_step) {
  static const char* names[] = {"step1:pi_X",     "step2:alpha_X",
                                "step3:sigma2_X", "step4:pi_Z",
                                "step5:alpha_Z",  "step6:sigma2_Z"};
  return names[ligand_step - 1 + (side == ExposureSide::Receptor ? 3 : 0)];
}

}  // namespace

Hyperparams Hyperparams::defaults(Eigen::Index n) {
  Hyperparams h;
  const double g = std::min(static_cast<double>(n), 100.0);
  h.g_G = h.g_H = h.g_V = h.g_Z = h.g_beta = g;
  return h;
}

void Hyperparams::validate() const {
  for (double v : {g_G, g_H, g_V, g_Z, g_beta, a_sigma, b_sigma, a_rho, b_rho,
                   ridge_lambda}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("hyperparameters must be positive and finite");
    }
  }
  if (!(nu_1 > 0.0 && nu_1 <= 0.01)) {
    throw ValidationError("nu_1 must lie in (0, 0.01]");
  }
}

McmcSettings McmcSettings::benchmark(std::uint64_t seed) {
  return {20000, 2000, 5, seed, false};
}

McmcSettings McmcSettings::screening(std::uint64_t seed) {
  return {20000, 2000, 10, seed, false};
}

void McmcSettings::validate() const {
  if (iterations < 1 || burn_in < 0 || thin < 1 || burn_in >= iterations) {
    throw ValidationError(
        "MCMC settings need iterations >= 1, 0 <= burn_in < iterations, thin >= 1");
  }
}

SamplerData::SamplerData(Dataset d) : data(std::move(d)) {
  GtG = data.G.transpose() * data.G;
  HtH = data.H.transpose() * data.H;
  VtV = data.V.transpose() * data.V;
}

GaussianConditional instrument_effect_conditional(const ChainState& s,
                                                  const SamplerData& sd,
                                                  const Hyperparams& h,
                                                  ExposureSide side) {
  const ExposureView v = exposure_view(s, sd, h, side);
  const Dataset& d = sd.data;
  const MatrixXd IW = row_scaled(v.instruments, v.weight);
  VectorXd r = v.outcome_base;
  VectorXd x_target = v.exposure;
  if (d.p_V() > 0) {
    const VectorXd Va = d.V * v.alpha;
    r -= Va.cwiseProduct(v.weight);
    x_target -= Va;
  }
  const MatrixXd prec =
      (1.0 + 1.0 / v.g_instrument) / v.sigma2 * v.instrument_gram +
      IW.transpose() * IW / s.sigma2_Y;
  const VectorXd lin = v.instruments.transpose() * x_target / v.sigma2 +
                       IW.transpose() * r / s.sigma2_Y;
  return from_precision(prec, lin, h.ridge_lambda, side_step(side, 1));
}

GaussianConditional exposure_covariate_conditional(const ChainState& s,
                                                   const SamplerData& sd,
                                                   const Hyperparams& h,
                                                   ExposureSide side) {
  const ExposureView v = exposure_view(s, sd, h, side);
  const Dataset& d = sd.data;
  if (d.p_V() == 0) return {VectorXd(0), MatrixXd(0, 0)};
  const MatrixXd VW = row_scaled(d.V, v.weight);
  const VectorXd Ip = v.instruments * v.pi;
  const VectorXd r = v.outcome_base - Ip.cwiseProduct(v.weight);
  const MatrixXd prec = (1.0 + 1.0 / h.g_V) / v.sigma2 * sd.VtV +
                        VW.transpose() * VW / s.sigma2_Y;
  const VectorXd lin = d.V.transpose() * (v.exposure - Ip) / v.sigma2 +
                       VW.transpose() * r / s.sigma2_Y;
  return from_precision(prec, lin, h.ridge_lambda, side_step(side, 2));
}

InverseGammaConditional exposure_variance_conditional(const ChainState& s,
                                                      const SamplerData& sd,
                                                      const Hyperparams& h,
                                                      ExposureSide side) {
  const bool ligand = side == ExposureSide::Ligand;
  const Dataset& d = sd.data;
  const MatrixXd& W = ligand ? d.G : d.H;
  const MatrixXd& WtW = ligand ? sd.GtG : sd.HtH;
  const VectorXd& e = ligand ? d.x : d.z;
  const VectorXd& pi = ligand ? s.pi_X : s.pi_Z;
  const VectorXd& alpha = ligand ? s.alpha_X : s.alpha_Z;
  const double g = ligand ? h.g_G : h.g_H;

  VectorXd res = e - W * pi;
  double cov_pen = 0.0;
  if (d.p_V() > 0) {
    res -= d.V * alpha;
    cov_pen = alpha.dot(sd.VtV * alpha) / h.g_V;
  }
  const double quad = res.squaredNorm() + pi.dot(WtW * pi) / g + cov_pen;
  InverseGammaConditional c;
  c.shape = h.a_sigma +
            static_cast<double>(d.n() + W.cols() + d.p_V()) / 2.0;
  c.scale = h.b_sigma + 0.5 * quad;
  return c;
}

GaussianConditional intercept_conditional(const ChainState& s,
                                          const SamplerData& sd) {
  const Dataset& d = sd.data;
  VectorXd r = d.y - s.X_beta * s.beta - s.beta_Z * s.Z_star;
  if (d.p_V() > 0) r -= d.V * s.alpha_Y;
  const double n = static_cast<double>(d.n());
  const double denom = n + 1.0 / n;
  GaussianConditional c;
  c.mean = VectorXd::Constant(1, r.sum() / denom);
  c.cov = MatrixXd::Constant(1, 1, s.sigma2_Y / denom);
  return c;
}

GaussianConditional outcome_covariate_conditional(const ChainState& s,
                                                  const SamplerData& sd,
                                                  const Hyperparams& h) {
  const Dataset& d = sd.data;
  if (d.p_V() == 0) return {VectorXd(0), MatrixXd(0, 0)};
  const VectorXd r =
      (d.y.array() - s.mu).matrix() - s.X_beta * s.beta - s.beta_Z * s.Z_star;
  const double c_V = h.g_V / (1.0 + h.g_V);
  const Eigen::Index p = d.p_V();
  MatrixXd rhs(p, p + 1);
  rhs << MatrixXd::Identity(p, p), d.V.transpose() * r;
  const MatrixXd sol = ridge_solve(sd.VtV, h.ridge_lambda, rhs, "step8:alpha_Y");
  GaussianConditional c;
  c.cov = c_V * s.sigma2_Y * sol.leftCols(p);
  c.mean = c_V * sol.col(p);
  return c;
}

GaussianConditional receptor_effect_conditional(const ChainState& s,
                                                const SamplerData& sd,
                                                const Hyperparams& h) {
  const Dataset& d = sd.data;
  VectorXd r = (d.y.array() - s.mu).matrix() - s.X_beta * s.beta;
  if (d.p_V() > 0) r -= d.V * s.alpha_Y;
  const double c_Z = h.g_Z / (1.0 + h.g_Z);
  const double zz = s.Z_star.squaredNorm() + h.ridge_lambda;
  if (!(zz > 0.0)) throw NumericalError("step9:beta_Z", "Z*'Z* + lambda <= 0");
  GaussianConditional c;
  c.mean = VectorXd::Constant(1, c_Z * s.Z_star.dot(r) / zz);
  c.cov = MatrixXd::Constant(1, 1, c_Z * s.sigma2_Y / zz);
  return c;
}

InverseGammaConditional outcome_variance_conditional(const ChainState& s,
                                                     const SamplerData& sd,
                                                     const Hyperparams& h) {
  const Dataset& d = sd.data;
  const VectorXd Xb = s.X_beta * s.beta;
  VectorXd e = (d.y.array() - s.mu).matrix() - Xb - s.beta_Z * s.Z_star;
  double cov_pen = 0.0;
  if (d.p_V() > 0) {
    e -= d.V * s.alpha_Y;
    cov_pen = s.alpha_Y.dot(sd.VtV * s.alpha_Y) / h.g_V;
  }
  const double n = static_cast<double>(d.n());
  const double quad = e.squaredNorm() + s.mu * s.mu / n +
                      Xb.squaredNorm() / (h.g_beta * s.s_gamma(h)) +
                      s.beta_Z * s.beta_Z * s.Z_star.squaredNorm() / h.g_Z +
                      cov_pen;
  InverseGammaConditional c;
  c.shape = h.a_sigma + (n + static_cast<double>(d.p_V()) + 4.0) / 2.0;
  c.scale = h.b_sigma + 0.5 * quad;
  return c;
}

GaussianConditional communication_effect_conditional(const ChainState& s,
                                                     const SamplerData& sd,
                                                     const Hyperparams& h) {
  const VectorXd r = outcome_residual_without_beta(s, sd.data);
  const double gs = h.g_beta * s.s_gamma(h);
  const double c_gamma = gs / (1.0 + gs);
  const MatrixXd XtX = s.X_beta.transpose() * s.X_beta;
  MatrixXd rhs(2, 3);
  rhs << MatrixXd::Identity(2, 2), s.X_beta.transpose() * r;
  const MatrixXd sol = ridge_solve(XtX, h.ridge_lambda, rhs, "step11:beta");
  GaussianConditional c;
  c.cov = c_gamma * s.sigma2_Y * sol.leftCols(2);
  c.mean = c_gamma * sol.col(2);
  return c;
}

double communication_quadratic(const ChainState& s) {
  return (s.X_beta * s.beta).squaredNorm();
}

double inclusion_probability(double q, double sigma2_Y, double rho,
                             const Hyperparams& h) {
  if (q < 0.0 || !std::isfinite(q)) {
    throw NumericalError("step12:gamma", "negative or non-finite quadratic form");
  }
  const double log_a = -0.5 * q / (h.g_beta * sigma2_Y) + std::log(rho);
  const double log_b = -0.5 * q / (h.g_beta * h.nu_1 * sigma2_Y) +
                       std::log1p(-rho) - std::log(h.nu_1);
  const double m = std::max(log_a, log_b);
  const double ea = std::exp(log_a - m);
  const double eb = std::exp(log_b - m);
  return ea / (ea + eb);
}

VectorXd draw_gaussian(const GaussianConditional& c, Rng& rng,
                       const std::string& step) {
  const Eigen::Index p = c.mean.size();
  if (p == 0) return VectorXd(0);
  if (p == 1) {
    if (!(c.cov(0, 0) > 0.0)) throw NumericalError(step, "non-positive variance");
    return VectorXd::Constant(1, c.mean(0) + std::sqrt(c.cov(0, 0)) * rng.normal());
  }
  Eigen::LLT<MatrixXd> llt(c.cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(step, "covariance is not positive definite");
  }
  VectorXd xi(p);
  for (Eigen::Index i = 0; i < p; ++i) xi(i) = rng.normal();
  return c.mean + llt.matrixL() * xi;
}

double draw_inverse_gamma(const InverseGammaConditional& c, Rng& rng,
                          const std::string& step) {
  if (!(c.scale > 0.0) || !std::isfinite(c.scale) || !(c.shape > 0.0)) {
    throw NumericalError(step, "inverse-gamma parameters must be positive and finite");
  }
  return rng.inverse_gamma(c.shape, c.scale);
}

void update_exposure_block(ChainState& s, const SamplerData& sd,
                           const Hyperparams& h, ExposureSide side, Rng& rng) {
  const bool ligand = side == ExposureSide::Ligand;
  VectorXd& pi = ligand ? s.pi_X : s.pi_Z;
  VectorXd& alpha = ligand ? s.alpha_X : s.alpha_Z;
  double& sigma2 = ligand ? s.sigma2_X : s.sigma2_Z;

  pi = draw_gaussian(instrument_effect_conditional(s, sd, h, side), rng,
                     side_step(side, 1));
  alpha = draw_gaussian(exposure_covariate_conditional(s, sd, h, side), rng,
                        side_step(side, 2));
  sigma2 = draw_inverse_gamma(exposure_variance_conditional(s, sd, h, side),
                              rng, side_step(side, 3));
}

void recompute_plugins(ChainState& s, const Dataset& d) {
  s.X_star = d.G * s.pi_X;
  s.Z_star = d.H * s.pi_Z;
  if (d.p_V() > 0) {
    s.X_star += d.V * s.alpha_X;
    s.Z_star += d.V * s.alpha_Z;
  }
  s.X_beta.resize(d.n(), 2);
  s.X_beta.col(0) = s.X_star;
  s.X_beta.col(1) = s.X_star.cwiseProduct(s.Z_star);
}

void update_outcome_nuisance(ChainState& s, const SamplerData& sd,
                             const Hyperparams& h, Rng& rng) {
  s.mu = draw_gaussian(intercept_conditional(s, sd), rng, "step7:mu")(0);
  s.alpha_Y = draw_gaussian(outcome_covariate_conditional(s, sd, h), rng,
                            "step8:alpha_Y");
  s.beta_Z = draw_gaussian(receptor_effect_conditional(s, sd, h), rng,
                           "step9:beta_Z")(0);
  s.sigma2_Y = draw_inverse_gamma(outcome_variance_conditional(s, sd, h), rng,
                                  "step10:sigma2_Y");
}

void update_communication_block(ChainState& s, const SamplerData& sd,
                                const Hyperparams& h, Rng& rng) {
  s.beta = draw_gaussian(communication_effect_conditional(s, sd, h), rng,
                         "step11:beta");
  const double p =
      inclusion_probability(communication_quadratic(s), s.sigma2_Y, s.rho, h);
  s.gamma = rng.bernoulli(p) ? 1 : 0;
  s.rho = rng.beta(h.a_rho + s.gamma, h.b_rho + 1.0 - s.gamma);
  if (!(s.rho > 0.0 && s.rho < 1.0)) {
    throw NumericalError("step13:rho", "draw left (0, 1)");
  }
}

ChainState initial_state(const SamplerData& sd, const Hyperparams& h) {
  const Dataset& d = sd.data;
  const Eigen::Index pV = d.p_V();
  ChainState s;

  auto shrunk_ls = [&](const MatrixXd& W, const VectorXd& target, double g,
                       VectorXd& pi, VectorXd& alpha) {
    MatrixXd D(d.n(), W.cols() + pV);
    D << W, d.V;
    const VectorXd coef = (g / (1.0 + g)) *
        ridge_solve(D.transpose() * D, h.ridge_lambda, D.transpose() * target,
                    "init");
    pi = coef.head(W.cols());
    alpha = coef.tail(pV);
  };
  shrunk_ls(d.G, d.x, h.g_G, s.pi_X, s.alpha_X);
  shrunk_ls(d.H, d.z, h.g_H, s.pi_Z, s.alpha_Z);
  if (pV > 0) {
    s.alpha_Y = (h.g_V / (1.0 + h.g_V)) *
        ridge_solve(sd.VtV, h.ridge_lambda, d.V.transpose() * d.y, "init");
  } else {
    s.alpha_Y = VectorXd(0);
  }
  s.sigma2_X = s.sigma2_Z = s.sigma2_Y = 1.0;
  s.mu = 0.0;
  s.beta_Z = 0.0;
  s.beta.setZero();
  s.gamma = 1;
  s.rho = h.a_rho / (h.a_rho + h.b_rho);
  recompute_plugins(s, d);
  return s;
}

PosteriorSummary run_chain(const Dataset& data, const Hyperparams& h,
                           const McmcSettings& mcmc) {
  data.validate();
  h.validate();
  mcmc.validate();
  const SamplerData sd(data);
  ChainState s = initial_state(sd, h);
  Rng rng(mcmc.seed);

  PosteriorSummary out;
  long long included = 0;
  double sum_bx = 0.0, sum_bxz = 0.0, sum_bz = 0.0;
  for (int it = 0; it < mcmc.iterations; ++it) {
    try {
      update_exposure_block(s, sd, h, ExposureSide::Ligand, rng);
      // X* must reflect the fresh ligand draws before the receptor block.
      recompute_plugins(s, sd.data);
      update_exposure_block(s, sd, h, ExposureSide::Receptor, rng);
      recompute_plugins(s, sd.data);
      update_outcome_nuisance(s, sd, h, rng);
      update_communication_block(s, sd, h, rng);
    } catch (const NumericalError& e) {
      throw NumericalError(e.step(), "iteration " + std::to_string(it) + ": " +
                                         e.what());
    }
    if (it < mcmc.burn_in || (it - mcmc.burn_in + 1) % mcmc.thin != 0) continue;
    ++out.n_kept;
    included += s.gamma;
    sum_bx += s.beta(0);
    sum_bxz += s.beta(1);
    sum_bz += s.beta_Z;
    if (mcmc.keep_draws) {
      out.draws.push_back({it, s.beta(0), s.beta(1), s.beta_Z, s.mu, s.sigma2_Y,
                           s.rho, s.gamma});
    }
  }
  if (out.n_kept == 0) throw ValidationError("MCMC settings keep no draws");
  const double k = static_cast<double>(out.n_kept);
  out.pip = static_cast<double>(included) / k;
  out.mean_beta_X = sum_bx / k;
  out.mean_beta_XZ = sum_bxz / k;
  out.mean_beta_Z = sum_bz / k;
  return out;
}

}  // namespace mrccc
